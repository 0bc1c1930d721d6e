//! Rigid frame aligning a vertex cone with the origin and the +z axis.

use super::cone::VertexCone;
use super::vec3::{Mat3, Point3, UnitVector3};
use crate::num::Real;

/// Rigid transform T(x) = rot (x - apex): sends the apex to the origin and
/// the cone axis to +z. Rows of `rot` are orthonormal within 1e-12.
#[derive(Debug, Clone, Copy)]
pub struct ProbeFrame<R> {
    pub apex: Point3<R>,
    pub rot: Mat3<R>,
}

impl<R: Real> ProbeFrame<R> {
    pub fn identity() -> Self {
        ProbeFrame {
            apex: Point3::zero(),
            rot: Mat3::identity(),
        }
    }

    pub fn to_frame(&self, x: Point3<R>) -> Point3<R> {
        self.rot.apply(x - self.apex)
    }

    pub fn from_frame(&self, x: Point3<R>) -> Point3<R> {
        self.rot.transpose().apply(x) + self.apex
    }

    /// Rotates a world-space difference vector into frame coordinates
    /// (translation cancels in differences).
    pub fn rotate_difference(&self, d: Point3<R>) -> Point3<R> {
        self.rot.apply(d)
    }

    /// Pulls a frame-space gradient back to world coordinates.
    pub fn gradient_to_world(&self, g: Point3<R>) -> Point3<R> {
        self.rot.transpose().apply(g)
    }

    /// Probe axis in world coordinates (+z of the frame).
    pub fn axis(&self) -> UnitVector3<R> {
        let col = self
            .rot
            .transpose()
            .apply(Point3::new(R::zero(), R::zero(), R::one()));
        UnitVector3::try_new(col).expect("rotation rows orthonormal")
    }

    /// World position of the probe point at offset `r` below the apex.
    pub fn probe_point(&self, r: R) -> Point3<R> {
        self.apex - self.axis().as_point().scale(r)
    }
}

/// Frame for a vertex cone: apex to origin, axis to +z.
pub fn probe_frame<R: Real>(cone: &VertexCone<R>) -> ProbeFrame<R> {
    ProbeFrame {
        apex: cone.apex,
        rot: Mat3::rotation_to_plus_z(&cone.axis),
    }
}
