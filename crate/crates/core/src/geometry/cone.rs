//! Vertex cones: the local description of a polyhedral corner as
//! {angle to axis <= alpha(phi)} within a ball about the apex.

use super::polyhedron::ConvexPolyhedron;
use super::vec3::{Mat3, Point3, UnitVector3};
use crate::error::{Error, Result};
use crate::num::{real, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of azimuthal samples of the aperture function.
pub const APERTURE_SAMPLES: usize = 256;

/// A corner of a cell: apex, interior axis, and the sampled aperture
/// function alpha(phi) on a uniform phi-grid (linear interpolation between
/// samples). Requires 0 < alpha1 <= alpha(phi) <= alpha2 < pi/2.
#[derive(Debug, Clone)]
pub struct VertexCone<R> {
    pub apex: Point3<R>,
    pub axis: UnitVector3<R>,
    pub alpha_min: R,
    pub alpha_max: R,
    /// alpha(phi_k), phi_k = 2 pi k / APERTURE_SAMPLES, in frame coordinates
    /// where the axis is +z.
    pub alpha_samples: Vec<R>,
    pub truncation_radius: R,
}

impl<R: Real> VertexCone<R> {
    /// Constant-aperture cone; mostly for validation scans.
    pub fn constant_aperture(
        apex: Point3<R>,
        axis: UnitVector3<R>,
        alpha: R,
        r0: R,
    ) -> Result<Self> {
        if alpha <= R::zero() || alpha >= R::FRAC_PI_2() {
            return Err(Error::ApertureOrdering);
        }
        Ok(VertexCone {
            apex,
            axis,
            alpha_min: alpha,
            alpha_max: alpha,
            alpha_samples: vec![alpha; APERTURE_SAMPLES],
            truncation_radius: r0,
        })
    }

    /// Aperture at azimuth `phi` (radians), linear interpolation on the grid.
    pub fn aperture(&self, phi: R) -> R {
        let two_pi = real::<R>(2.0) * R::PI();
        let mut p = phi % two_pi;
        if p < R::zero() {
            p += two_pi;
        }
        let step = two_pi / real(APERTURE_SAMPLES as f64);
        let t = p / step;
        let i = t.floor().to_usize().unwrap_or(0) % APERTURE_SAMPLES;
        let frac = t - t.floor();
        let a = self.alpha_samples[i];
        let b = self.alpha_samples[(i + 1) % APERTURE_SAMPLES];
        a + (b - a) * frac
    }
}

/// Direction maximizing the minimal angle margin to the planes of the faces
/// incident to a polyhedral-cone vertex (the Chebyshev direction of the
/// tangent cone). Projected subgradient ascent on the sphere with seeded
/// random restarts; deterministic.
fn chebyshev_axis<R: Real>(normals: &[Point3<R>]) -> Option<UnitVector3<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
    let mut candidates: Vec<Point3<R>> = Vec::new();
    // mean of inward normals is a good start
    let mut mean = Point3::zero();
    for n in normals {
        mean = mean - *n;
    }
    if let Some(u) = mean.normalize() {
        candidates.push(u.as_point());
    }
    for _ in 0..32 {
        let v = Point3::new(
            real::<R>(rng.gen_range(-1.0..1.0)),
            real::<R>(rng.gen_range(-1.0..1.0)),
            real::<R>(rng.gen_range(-1.0..1.0)),
        );
        if let Some(u) = v.normalize() {
            candidates.push(u.as_point());
        }
    }
    let margin = |u: &Point3<R>| -> R {
        normals
            .iter()
            .map(|n| -n.dot(u))
            .fold(R::max_value(), |a, b| a.min(b))
    };
    let mut best: Option<(R, Point3<R>)> = None;
    for mut u in candidates {
        let mut step = real::<R>(0.5);
        for _ in 0..200 {
            // active (worst) face
            let mut worst = R::max_value();
            let mut active = Point3::zero();
            for n in normals {
                let m = -n.dot(&u);
                if m < worst {
                    worst = m;
                    active = *n;
                }
            }
            // ascent direction: -active projected onto tangent plane at u
            let g = -active;
            let tangential = g - u.scale(g.dot(&u));
            if tangential.norm() < real(1e-14) {
                break;
            }
            let trial = u + tangential.scale(step);
            let trial = match trial.normalize() {
                Some(t) => t.as_point(),
                None => break,
            };
            if margin(&trial) > worst {
                u = trial;
            } else {
                step *= real(0.5);
                if step < real(1e-12) {
                    break;
                }
            }
        }
        let m = margin(&u);
        if best.is_none() || m > best.as_ref().unwrap().0 {
            best = Some((m, u));
        }
    }
    best.and_then(|(m, u)| {
        if m > R::zero() {
            UnitVector3::try_new(u)
        } else {
            None
        }
    })
}

/// Builds the vertex cone at `vertex_index` with the Chebyshev axis.
///
/// Preconditions checked: the r0-ball about the vertex contains no other
/// vertex and stays clear of non-incident faces (so the ball intersected
/// with the polyhedron equals the tangent cone there). Errors with
/// "facet-like vertex" when the aperture reaches pi/2.
pub fn vertex_cone<R: Real>(
    poly: &ConvexPolyhedron<R>,
    vertex_index: usize,
    r0: R,
) -> Result<VertexCone<R>> {
    let normals = incident_normals(poly, vertex_index, r0)?;
    let axis = chebyshev_axis(&normals).ok_or(Error::FacetLikeVertex {
        max_alpha: std::f64::consts::FRAC_PI_2,
    })?;
    vertex_cone_with_axis(poly, vertex_index, r0, axis)
}

/// Same as [`vertex_cone`] but with a caller-chosen axis; rejects axes for
/// which the aperture reaches pi/2 (e.g. an axis lying in an incident face).
pub fn vertex_cone_with_axis<R: Real>(
    poly: &ConvexPolyhedron<R>,
    vertex_index: usize,
    r0: R,
    axis: UnitVector3<R>,
) -> Result<VertexCone<R>> {
    let normals = incident_normals(poly, vertex_index, r0)?;
    let apex = poly.vertices()[vertex_index];
    let rot = Mat3::rotation_to_plus_z(&axis);
    let inv = rot.transpose();

    let two_pi = real::<R>(2.0) * R::PI();
    let step = two_pi / real(APERTURE_SAMPLES as f64);
    let mut samples = Vec::with_capacity(APERTURE_SAMPLES);
    let guard = real::<R>(1e-9);
    for k in 0..APERTURE_SAMPLES {
        let phi = step * real(k as f64);
        // theta bound against each incident face plane:
        // ray dir(theta) = inv * (sin t cos phi, sin t sin phi, cos t);
        // constraint n . dir <= 0. With m = rot*n = (m1,m2,m3):
        //   sin t (m1 cos phi + m2 sin phi) + m3 cos t <= 0.
        let mut theta_max = R::FRAC_PI_2();
        for n in &normals {
            let m = rot.apply(*n);
            let c = m.x() * phi.cos() + m.y() * phi.sin();
            let m3 = m.z();
            if m3 >= -guard {
                // axis not strictly inside this face's half-space
                return Err(Error::FacetLikeVertex {
                    max_alpha: std::f64::consts::FRAC_PI_2,
                });
            }
            if c > R::zero() {
                theta_max = theta_max.min((-m3 / c).atan());
            }
        }
        let _ = inv;
        if theta_max >= R::FRAC_PI_2() - guard {
            return Err(Error::FacetLikeVertex {
                max_alpha: theta_max.to_f64().unwrap_or(std::f64::consts::FRAC_PI_2),
            });
        }
        if theta_max <= R::zero() {
            return Err(Error::ConePrecondition(
                "axis outside the tangent cone".into(),
            ));
        }
        samples.push(theta_max);
    }
    let alpha_min = samples
        .iter()
        .cloned()
        .fold(R::max_value(), |a, b| a.min(b));
    let alpha_max = samples.iter().cloned().fold(R::zero(), |a, b| a.max(b));
    Ok(VertexCone {
        apex,
        axis,
        alpha_min,
        alpha_max,
        alpha_samples: samples,
        truncation_radius: r0,
    })
}

/// Normals of the faces incident to the vertex, after checking that the
/// r0-ball about the vertex sees only those faces.
fn incident_normals<R: Real>(
    poly: &ConvexPolyhedron<R>,
    vertex_index: usize,
    r0: R,
) -> Result<Vec<Point3<R>>> {
    if vertex_index >= poly.vertices().len() {
        return Err(Error::ConePrecondition("vertex index out of range".into()));
    }
    let apex = poly.vertices()[vertex_index];
    for (i, v) in poly.vertices().iter().enumerate() {
        if i != vertex_index && v.dist(&apex) < r0 {
            return Err(Error::ConePrecondition(format!(
                "vertex {i} lies inside the r0-ball of vertex {vertex_index}"
            )));
        }
    }
    let tol = real::<R>(super::polyhedron::GEOM_TOL);
    let mut normals = Vec::new();
    for (fi, f) in poly.faces().iter().enumerate() {
        if (f.normal.dot(&apex) - f.offset).abs() <= tol {
            normals.push(f.normal.as_point());
        } else {
            // non-incident faces must stay clear of the ball
            let anchor = poly.vertices()[f.cycle[0]];
            let mut dist = R::max_value();
            for w in 1..(f.cycle.len() - 1) {
                let b = poly.vertices()[f.cycle[w]];
                let d = poly.vertices()[f.cycle[w + 1]];
                dist = dist.min(super::polyhedron::point_triangle_distance(
                    &apex, &anchor, &b, &d,
                ));
            }
            if dist < r0 {
                return Err(Error::ConePrecondition(format!(
                    "non-incident face {fi} cuts the r0-ball of vertex {vertex_index}"
                )));
            }
        }
    }
    // merge duplicate normals from coplanar (triangulated) faces
    let mut unique: Vec<Point3<R>> = Vec::new();
    for n in normals {
        if !unique.iter().any(|u| (*u - n).norm() < real(1e-9)) {
            unique.push(n);
        }
    }
    if unique.len() < 3 {
        return Err(Error::ConePrecondition(format!(
            "vertex {vertex_index} has fewer than 3 distinct incident face planes"
        )));
    }
    Ok(unique)
}
