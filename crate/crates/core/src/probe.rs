//! Data functionals for corner probing: the boundary pairing of the field
//! with the singular kernel, volume moments of cells, and cone moments with
//! their 1/r blow-up at strictly convex corners.

use crate::error::{Error, Result};
use crate::forward::BoundaryField;
use crate::geometry::{ConvexPolyhedron, Point3, ProbeFrame, Scene, VertexCone};
use crate::kernels::{self, Wavenumber};
use crate::num::{real, Cplx, Real};
use crate::quadrature::{adaptive_quadrature, gauss_legendre, QuadratureSpec};

/// Probe point at offset `r` below a cone apex: world position
/// apex - r * axis, i.e. (0, 0, -r) in frame coordinates.
#[derive(Debug, Clone, Copy)]
pub struct ProbePoint<R> {
    pub frame: ProbeFrame<R>,
    pub offset: R,
    pub world: Point3<R>,
}

impl<R: Real> ProbePoint<R> {
    /// Requires 0 < r < r0 (the cone's truncation radius).
    pub fn new(cone: &VertexCone<R>, r: R) -> Result<Self> {
        if r <= R::zero() || r >= cone.truncation_radius {
            return Err(Error::ProbeRadiusRange {
                r: r.to_f64().unwrap_or(f64::NAN),
                max: cone.truncation_radius.to_f64().unwrap_or(f64::NAN),
            });
        }
        let frame = crate::geometry::probe_frame(cone);
        Ok(ProbePoint {
            frame,
            offset: r,
            world: frame.probe_point(r),
        })
    }
}

/// Moment samples M(r) with strictly decreasing radii in (0, r0).
#[derive(Debug, Clone)]
pub struct ConeMomentCurve<R> {
    pub entries: Vec<(R, R)>,
}

impl<R: Real> ConeMomentCurve<R> {
    pub fn new(entries: Vec<(R, R)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 > w[1].0));
        ConeMomentCurve { entries }
    }

    /// Least-squares slope of log |M| against log r.
    pub fn log_log_slope(&self) -> R {
        let pts: Vec<(R, R)> = self
            .entries
            .iter()
            .filter(|(_, m)| m.abs() > R::zero())
            .map(|(r, m)| (r.ln(), m.abs().ln()))
            .collect();
        let n = real::<R>(pts.len() as f64);
        let sx = pts.iter().map(|p| p.0).fold(R::zero(), |a, b| a + b);
        let sy = pts.iter().map(|p| p.1).fold(R::zero(), |a, b| a + b);
        let sxx = pts.iter().map(|p| p.0 * p.0).fold(R::zero(), |a, b| a + b);
        let sxy = pts.iter().map(|p| p.0 * p.1).fold(R::zero(), |a, b| a + b);
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}

/// Complex boundary functional together with its real reduction. With exact
/// data for a real kernel the imaginary part is a quadrature/noise
/// diagnostic (for complex source amplitudes the value itself is complex).
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFunctional<R> {
    pub value: Cplx<R>,
    pub real_part: R,
}

/// Quadrature of [dnu(x) phi(x,y) - d_nu phi(x,y) u(x)] over the measurement
/// sphere; `y` must lie strictly outside the sphere.
pub fn boundary_functional<R: Real>(
    field: &BoundaryField<R>,
    kappa: Wavenumber<R>,
    frame: &ProbeFrame<R>,
    y: Point3<R>,
) -> Result<BoundaryFunctional<R>> {
    if y.norm() <= field.grid.radius {
        return Err(Error::ProbeNotExterior);
    }
    let value = sphere_pairing(field, kappa, frame, y)?;
    Ok(BoundaryFunctional {
        value,
        real_part: value.re,
    })
}

/// The same sphere quadrature without the exterior-position guard; interior
/// evaluation points are legitimate in the corner-limit identity, where the
/// distributional correction term accounts for the kernel singularity.
pub fn sphere_pairing<R: Real>(
    field: &BoundaryField<R>,
    kappa: Wavenumber<R>,
    frame: &ProbeFrame<R>,
    y: Point3<R>,
) -> Result<Cplx<R>> {
    let grid = &field.grid;
    let mut acc = Cplx::new(R::zero(), R::zero());
    for i in 0..grid.n_theta {
        for j in 0..grid.n_phi {
            let k = i * grid.n_phi + j;
            let x = grid.node_point(i, j);
            let (p, gp) = kernels::phi_pair_with_gradient(kappa, frame, x, y)?;
            let nhat = x.scale(R::one() / grid.radius);
            let dphi = nhat.dot(&gp);
            let w = grid.weight(i, j);
            acc += (field.dnu[k] * p - field.u[k] * dphi) * w;
        }
    }
    Ok(acc)
}

/// Integral of the probe kernel over one cell, graded toward `y`:
/// int_cell phi(x, y) dx. Errors when `y` lies inside the cell or the
/// refinement budget runs out.
pub fn volume_moment<R: Real>(
    cell: &ConvexPolyhedron<R>,
    kappa: Wavenumber<R>,
    frame: &ProbeFrame<R>,
    y: Point3<R>,
    spec: &QuadratureSpec<R>,
) -> Result<R> {
    if cell.contains(&y) {
        return Err(Error::PointInsideCell { cell: usize::MAX });
    }
    let tets = cell.tetrahedralize()?;
    let spec = spec.clone().with_oscillation_cap(kappa.get());
    let (v, _err) = adaptive_quadrature(tets, y, &spec, |x| {
        kernels::phi_pair(kappa, frame, x, y).unwrap_or(R::zero())
    })?;
    Ok(v)
}

/// Complex companion of [`volume_moment`]: int_cell d3G(rot(x - y)) dx,
/// the cell moment of the full complex kernel (needed by the corner-limit
/// correction term).
pub fn volume_moment_complex<R: Real>(
    cell: &ConvexPolyhedron<R>,
    kappa: Wavenumber<R>,
    frame: &ProbeFrame<R>,
    y: Point3<R>,
    spec: &QuadratureSpec<R>,
) -> Result<Cplx<R>> {
    if cell.contains(&y) {
        return Err(Error::PointInsideCell { cell: usize::MAX });
    }
    let tets = cell.tetrahedralize()?;
    let spec = spec.clone().with_oscillation_cap(kappa.get());
    let (v, _err) = adaptive_quadrature(tets, y, &spec, |x| {
        kernels::d3_g_pair(kappa, frame, x, y).unwrap_or(Cplx::new(R::zero(), R::zero()))
    })?;
    Ok(v)
}

/// theta-antiderivative F(alpha) = 3 cos^3(alpha) - 3 cos^5(alpha); the
/// per-azimuth lower-bound building block of the cone-moment estimate.
/// Nonnegative on [0, pi/2] with F(0) = F(pi/2) = 0.
pub fn theta_antiderivative<R: Real>(alpha: R) -> R {
    let c = alpha.cos();
    real::<R>(3.0) * c.powi(3) - real::<R>(3.0) * c.powi(5)
}

/// Certified lower-bound constant for lim inf r * M(r):
/// 3 pi min{F-terms at alpha1/2 and alpha2}. Requires 0 < a1 < a2 < pi/2.
pub fn c0_lower_bound<R: Real>(alpha1: R, alpha2: R) -> Result<R> {
    if !(R::zero() < alpha1 && alpha1 < alpha2 && alpha2 < R::FRAC_PI_2()) {
        return Err(Error::ApertureOrdering);
    }
    let term = |a: R| {
        let c = a.cos();
        c.powi(3) - c.powi(5)
    };
    let half = alpha1 / real(2.0);
    let m = term(half).min(term(alpha2));
    Ok(real::<R>(3.0) * R::PI() * m)
}

/// Cone moment M(r) = int over B_{r0}(0) ∩ {(0,0,r) + C(r0, alpha)} of
/// phi(x) dx, in the cone's spherical coordinates with dyadic radial
/// refinement toward the singular point at the origin.
///
/// Requires 0 < r < r0/4. The polar bound at radius rho and azimuth phi is
/// the smaller of the shifted-cone angle beta - asin(r sin(beta)/rho) and
/// the apex-ball bound from |x - r e3| <= r0.
pub fn cone_moment<R: Real>(cone: &VertexCone<R>, kappa: Wavenumber<R>, r: R) -> Result<R> {
    let r0 = cone.truncation_radius;
    if r <= R::zero() || r >= r0 / real(4.0) {
        return Err(Error::ProbeRadiusRange {
            r: r.to_f64().unwrap_or(f64::NAN),
            max: (r0 / real::<R>(4.0)).to_f64().unwrap_or(f64::NAN),
        });
    }
    let sup_theta = |rho: R, beta: R| -> R {
        let s = (r * beta.sin() / rho).min(R::one());
        let theta_cone = beta - s.asin();
        // |x - r e3|^2 <= r0^2  =>  cos(theta) >= (rho^2 + r^2 - r0^2) / (2 r rho)
        let c = (rho * rho + r * r - r0 * r0) / (real::<R>(2.0) * r * rho);
        let theta_ball = if c <= -R::one() {
            R::PI()
        } else if c >= R::one() {
            R::zero()
        } else {
            c.acos()
        };
        theta_cone.min(theta_ball).max(R::zero())
    };
    Ok(cone_like_moment(kappa, r, r0, cone, sup_theta))
}

/// Facet control: moment of the kernel over the shifted half-space slab
/// B_{r0}(0) ∩ {x3 >= r}. A genuine facet has no 1/r blow-up: M(r) * r -> 0.
pub fn facet_slab_moment<R: Real>(kappa: Wavenumber<R>, r: R, r0: R) -> Result<R> {
    if r <= R::zero() || r >= r0 / real(4.0) {
        return Err(Error::ProbeRadiusRange {
            r: r.to_f64().unwrap_or(f64::NAN),
            max: (r0 / real::<R>(4.0)).to_f64().unwrap_or(f64::NAN),
        });
    }
    let sup_theta = |rho: R, _beta: R| -> R {
        // x3 >= r  =>  cos(theta) >= r / rho
        (r / rho).min(R::one()).acos()
    };
    // aperture unused by the slab bound; any cone with the right r0 works
    let dummy = VertexCone::constant_aperture(
        Point3::zero(),
        crate::geometry::UnitVector3::plus_z(),
        real(0.5),
        r0,
    )?;
    Ok(cone_like_moment(kappa, r, r0, &dummy, sup_theta))
}

fn cone_like_moment<R: Real, F>(
    kappa: Wavenumber<R>,
    r: R,
    r0: R,
    cone: &VertexCone<R>,
    sup_theta: F,
) -> R
where
    F: Fn(R, R) -> R,
{
    let n_phi = crate::geometry::APERTURE_SAMPLES;
    let (gl_nodes, gl_weights) = gauss_legendre::<R>(16);
    let two_pi = real::<R>(2.0) * R::PI();
    let dphi = two_pi / real(n_phi as f64);

    let mut total = R::zero();
    // dyadic radial shells [r 2^j, r 2^{j+1}] ∩ [r, r0]
    let mut lo = r;
    while lo < r0 {
        let hi = (lo * real(2.0)).min(r0);
        for (xi, wi) in gl_nodes.iter().zip(&gl_weights) {
            let rho = (lo + hi) / real(2.0) + (hi - lo) / real(2.0) * *xi;
            let w_rho = (hi - lo) / real(2.0) * *wi;
            for p in 0..n_phi {
                // midpoints of the aperture grid
                let phi = dphi * (real::<R>(p as f64) + real(0.5));
                let beta = cone.aperture(phi);
                let t_sup = sup_theta(rho, beta);
                if t_sup <= R::zero() {
                    continue;
                }
                let mut inner = R::zero();
                for (ti, wt) in gl_nodes.iter().zip(&gl_weights) {
                    let theta = t_sup / real(2.0) * (*ti + R::one());
                    let w_theta = t_sup / real(2.0) * *wt;
                    let st = theta.sin();
                    let x = Point3::new(
                        rho * st * phi.cos(),
                        rho * st * phi.sin(),
                        rho * theta.cos(),
                    );
                    let v = kernels::phi(kappa, x).unwrap_or(R::zero());
                    inner += v * st * w_theta;
                }
                total += inner * rho * rho * w_rho * dphi;
            }
        }
        lo = hi;
    }
    total
}

/// Probe functional S_k at `y`, with k = `known.len()` amplitudes already
/// recovered.
///
/// Exterior `y` (outside the measurement sphere): measurement-driven route,
/// S_k(y) = boundary functional minus the recovered cells' moments — an
/// exact identity there.
///
/// Interior `y`: oracle route; the tail moments are assembled from the
/// scene's reference amplitudes, since no correction-free boundary identity
/// exists inside the sphere (see the recovery module).
pub fn s_k<R: Real>(
    field: &BoundaryField<R>,
    scene: &Scene<R>,
    known: &[Cplx<R>],
    frame: &ProbeFrame<R>,
    y: Point3<R>,
    spec: &QuadratureSpec<R>,
) -> Result<Cplx<R>> {
    let kappa = Wavenumber::new(scene.kappa).ok_or(Error::NonPositiveArgument {
        z: scene.kappa.to_f64().unwrap_or(f64::NAN),
    })?;
    let k = known.len();
    for (ci, cell) in scene.cells.iter().enumerate() {
        if cell.polyhedron.contains(&y) {
            return Err(Error::PointInsideCell { cell: ci });
        }
    }
    if y.norm() > field.grid.radius {
        let bf = boundary_functional(field, kappa, frame, y)?;
        let mut acc = bf.value;
        for (j, c) in known.iter().enumerate() {
            let m = volume_moment(&scene.cells[j].polyhedron, kappa, frame, y, spec)?;
            acc -= c * m;
        }
        Ok(acc)
    } else {
        let mut acc = Cplx::new(R::zero(), R::zero());
        for cell in scene.cells.iter().skip(k) {
            let m = volume_moment(&cell.polyhedron, kappa, frame, y, spec)?;
            acc += cell.amplitude * m;
        }
        Ok(acc)
    }
}
