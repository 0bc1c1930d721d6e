//! Minimal 3-vector / 3x3 rotation arithmetic over a generic scalar.

use crate::num::{real, Real};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Index, Mul, Neg, Sub};

/// Cartesian point or vector in 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3<R>(pub [R; 3]);

impl<R: Real> Point3<R> {
    pub fn new(x: R, y: R, z: R) -> Self {
        Point3([x, y, z])
    }

    pub fn zero() -> Self {
        Point3([R::zero(); 3])
    }

    pub fn x(&self) -> R {
        self.0[0]
    }
    pub fn y(&self) -> R {
        self.0[1]
    }
    pub fn z(&self) -> R {
        self.0[2]
    }

    pub fn dot(&self, other: &Self) -> R {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: &Self) -> Self {
        Point3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    pub fn norm_sq(&self) -> R {
        self.dot(self)
    }

    pub fn norm(&self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: R) -> Self {
        Point3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }

    pub fn normalize(&self) -> Option<UnitVector3<R>> {
        UnitVector3::try_new(*self)
    }

    pub fn dist(&self, other: &Self) -> R {
        (*self - *other).norm()
    }

    /// Spherical azimuth in [0, 2pi).
    pub fn azimuth(&self) -> R {
        let phi = self.0[1].atan2(self.0[0]);
        if phi < R::zero() {
            phi + real::<R>(2.0) * R::PI()
        } else {
            phi
        }
    }
}

impl<R: Real> Add for Point3<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Point3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl<R: Real> Sub for Point3<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Point3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl<R: Real> Neg for Point3<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Point3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl<R: Real> Mul<R> for Point3<R> {
    type Output = Self;
    fn mul(self, s: R) -> Self {
        self.scale(s)
    }
}

impl<R: Real> Div<R> for Point3<R> {
    type Output = Self;
    fn div(self, s: R) -> Self {
        self.scale(R::one() / s)
    }
}

impl<R> Index<usize> for Point3<R> {
    type Output = R;
    fn index(&self, i: usize) -> &R {
        &self.0[i]
    }
}

/// Unit vector: Euclidean norm 1 within 1e-12 at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector3<R>(Point3<R>);

impl<R: Real> UnitVector3<R> {
    /// Normalizes `v`; `None` when `v` is numerically zero.
    pub fn try_new(v: Point3<R>) -> Option<Self> {
        let n = v.norm();
        if n < real::<R>(1e-300) {
            return None;
        }
        Some(UnitVector3(v.scale(R::one() / n)))
    }

    /// Wraps a vector already known to satisfy |v| = 1 within 1e-12.
    pub fn new_checked(v: Point3<R>) -> Option<Self> {
        if (v.norm() - R::one()).abs() < real::<R>(1e-12) {
            Some(UnitVector3(v))
        } else {
            None
        }
    }

    pub fn as_point(&self) -> Point3<R> {
        self.0
    }

    pub fn plus_x() -> Self {
        UnitVector3(Point3::new(R::one(), R::zero(), R::zero()))
    }
    pub fn plus_y() -> Self {
        UnitVector3(Point3::new(R::zero(), R::one(), R::zero()))
    }
    pub fn plus_z() -> Self {
        UnitVector3(Point3::new(R::zero(), R::zero(), R::one()))
    }

    pub fn dot(&self, other: &Point3<R>) -> R {
        self.0.dot(other)
    }
}

impl<R: Real> Neg for UnitVector3<R> {
    type Output = Self;
    fn neg(self) -> Self {
        UnitVector3(-self.0)
    }
}

/// Row-major 3x3 matrix; used for rotations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat3<R>(pub [[R; 3]; 3]);

impl<R: Real> Mat3<R> {
    pub fn identity() -> Self {
        let (o, z) = (R::one(), R::zero());
        Mat3([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn from_rows(r0: Point3<R>, r1: Point3<R>, r2: Point3<R>) -> Self {
        Mat3([r0.0, r1.0, r2.0])
    }

    pub fn apply(&self, v: Point3<R>) -> Point3<R> {
        Point3([
            self.0[0][0] * v.0[0] + self.0[0][1] * v.0[1] + self.0[0][2] * v.0[2],
            self.0[1][0] * v.0[0] + self.0[1][1] * v.0[1] + self.0[1][2] * v.0[2],
            self.0[2][0] * v.0[0] + self.0[2][1] * v.0[1] + self.0[2][2] * v.0[2],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    /// Rotation taking `axis` to +z; rows are an orthonormal frame.
    pub fn rotation_to_plus_z(axis: &UnitVector3<R>) -> Self {
        let w = axis.as_point();
        // pick the coordinate axis least aligned with w to seed the frame
        let seed = if w.x().abs() <= w.y().abs() && w.x().abs() <= w.z().abs() {
            Point3::new(R::one(), R::zero(), R::zero())
        } else if w.y().abs() <= w.z().abs() {
            Point3::new(R::zero(), R::one(), R::zero())
        } else {
            Point3::new(R::zero(), R::zero(), R::one())
        };
        let u = (seed - w.scale(seed.dot(&w)))
            .normalize()
            .expect("seed not parallel to axis")
            .as_point();
        let v = w.cross(&u);
        // rows (u, v, w): maps w -> e3
        Mat3::from_rows(u, v, w)
    }

    /// Max absolute deviation of M M^T from the identity.
    pub fn orthonormality_defect(&self) -> R {
        let t = self.transpose();
        let mut worst = R::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = R::zero();
                for k in 0..3 {
                    s += self.0[i][k] * t.0[k][j];
                }
                let target = if i == j { R::one() } else { R::zero() };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}
