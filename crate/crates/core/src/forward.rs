//! Forward simulation: the radiating volume potential of the piecewise-
//! constant source, sampled as Dirichlet and Neumann traces on the
//! measurement sphere.
//!
//! The field is u(y) = -(1/4\pi) \sum_j c_j \int_{D_j} e^{i kappa |x-y|}/|x-y| dx,
//! which satisfies (Delta + kappa^2) u = f with the outgoing radiation
//! behaviour, f = sum c_j chi_{D_j}.

use crate::dtn;
use crate::error::{Error, Result};
use crate::geometry::{Point3, Scene, Tetrahedron};
use crate::num::{real, Cplx, Real};
use crate::quadrature::{
    enforce_edge_cap, fixed_quadrature, grade_toward_targets, QuadratureSpec, TetRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Measurement grid on the sphere of radius R: Gauss-Legendre nodes in
/// cos(theta) (order L+1) tensored with 2L+2 uniform azimuths. Integrates
/// spherical harmonics exactly up to degree 2L+1 in theta and aliases none
/// up to |m| <= L; the surface weights sum to 4 pi R^2.
#[derive(Debug, Clone)]
pub struct SphereGrid<R> {
    pub radius: R,
    pub band_limit: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub thetas: Vec<R>,
    pub cos_thetas: Vec<R>,
    pub phis: Vec<R>,
    pub gl_weights: Vec<R>,
}

impl<R: Real> SphereGrid<R> {
    pub fn new(radius: R, band_limit: usize) -> Self {
        let n_theta = band_limit + 1;
        let n_phi = 2 * band_limit + 2;
        let (nodes, weights) = crate::quadrature::gauss_legendre::<R>(n_theta);
        let thetas: Vec<R> = nodes.iter().map(|x| x.acos()).collect();
        let phis: Vec<R> = (0..n_phi)
            .map(|j| real::<R>(2.0) * R::PI() * real(j as f64) / real(n_phi as f64))
            .collect();
        SphereGrid {
            radius,
            band_limit,
            n_theta,
            n_phi,
            thetas,
            cos_thetas: nodes,
            phis,
            gl_weights: weights,
        }
    }

    /// Default band limit for a wavenumber: max(16, ceil(2 kappa R) + 8).
    pub fn default_band_limit(kappa: R, radius: R) -> usize {
        let krr = (kappa * radius).to_f64().unwrap_or(0.0);
        ((2.0 * krr).ceil() as usize + 8).max(16)
    }

    pub fn node_count(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn node_point(&self, i: usize, j: usize) -> Point3<R> {
        let st = self.thetas[i].sin();
        Point3::new(
            self.radius * st * self.phis[j].cos(),
            self.radius * st * self.phis[j].sin(),
            self.radius * self.cos_thetas[i],
        )
    }

    pub fn point_by_index(&self, k: usize) -> Point3<R> {
        self.node_point(k / self.n_phi, k % self.n_phi)
    }

    /// Surface quadrature weight of node (i, j); includes the R^2 factor.
    pub fn weight(&self, i: usize, _j: usize) -> R {
        self.gl_weights[i]
            * (real::<R>(2.0) * R::PI() / real(self.n_phi as f64))
            * self.radius
            * self.radius
    }

    pub fn weight_by_index(&self, k: usize) -> R {
        self.weight(k / self.n_phi, k % self.n_phi)
    }
}

/// Whether Neumann data came from the simulator or the exterior map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeumannKind {
    Simulated,
    DtnDerived,
}

/// Sampled Dirichlet and Neumann traces on the measurement sphere.
#[derive(Debug, Clone)]
pub struct BoundaryField<R> {
    pub grid: SphereGrid<R>,
    pub kappa: R,
    pub u: Vec<Cplx<R>>,
    pub dnu: Vec<Cplx<R>>,
    pub neumann_kind: NeumannKind,
}

impl<R: Real> BoundaryField<R> {
    /// Nodewise difference of the Dirichlet traces (Neumann copied from
    /// `self`); used for noise-magnitude measurements.
    pub fn dirichlet_difference(&self, other: &BoundaryField<R>) -> BoundaryField<R> {
        assert_eq!(self.u.len(), other.u.len());
        BoundaryField {
            grid: self.grid.clone(),
            kappa: self.kappa,
            u: self.u.iter().zip(&other.u).map(|(a, b)| a - b).collect(),
            dnu: vec![Cplx::new(R::zero(), R::zero()); self.u.len()],
            neumann_kind: NeumannKind::DtnDerived,
        }
    }

    pub fn rms_u(&self) -> R {
        let n = real::<R>(self.u.len() as f64);
        (self
            .u
            .iter()
            .map(|v| v.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            / n)
            .sqrt()
    }
}

/// Graded tetrahedral meshes of the scene cells, prepared once per target
/// set and reused across evaluation points.
pub struct SourceMesh<R> {
    pub cell_tets: Vec<Vec<Tetrahedron<R>>>,
}

impl<R: Real> SourceMesh<R> {
    /// Meshes every cell, bisected to satisfy the oscillation cap
    /// edge <= 0.2/kappa and the grading rule edge <= dist/3 toward every
    /// target.
    pub fn for_targets(
        scene: &Scene<R>,
        targets: &[Point3<R>],
        spec: &QuadratureSpec<R>,
    ) -> Result<Self> {
        let spec = spec.clone().with_oscillation_cap(scene.kappa);
        let mut cell_tets = Vec::with_capacity(scene.cells.len());
        for (ci, cell) in scene.cells.iter().enumerate() {
            let tets = cell.polyhedron.tetrahedralize()?;
            let graded = grade_toward_targets(tets, targets, &spec).map_err(|e| match e {
                Error::PointInsideCell { .. } => Error::PointInsideCell { cell: ci },
                other => other,
            })?;
            cell_tets.push(graded);
        }
        Ok(SourceMesh { cell_tets })
    }

    /// Uniform mesh with no target grading (oscillation cap only).
    pub fn uniform(scene: &Scene<R>, extra_cap: Option<R>) -> Result<Self> {
        let osc = real::<R>(0.2) / scene.kappa;
        let cap = match extra_cap {
            Some(c) => c.min(osc),
            None => osc,
        };
        let mut cell_tets = Vec::with_capacity(scene.cells.len());
        for cell in &scene.cells {
            let tets = cell.polyhedron.tetrahedralize()?;
            cell_tets.push(enforce_edge_cap(tets, Some(cap)));
        }
        Ok(SourceMesh { cell_tets })
    }
}

/// e^{i kappa rho}/rho and its y-gradient components stacked as
/// [G, dG/dy1, dG/dy2, dG/dy3] for w = x - y.
#[inline]
fn potential_kernel<R: Real>(kappa: R, w: Point3<R>) -> [Cplx<R>; 4] {
    let rho = w.norm();
    let e = Cplx::from_polar(R::one() / rho, kappa * rho);
    // dG/dy = -g'(rho) w/rho, g' = e^{i k rho}(i k rho - 1)/rho^2
    let gp =
        Cplx::from_polar(R::one(), kappa * rho) * (Cplx::new(-R::one(), kappa * rho)) / (rho * rho);
    let s = -R::one() / rho;
    [e, gp * (w.x() * s), gp * (w.y() * s), gp * (w.z() * s)]
}

/// Field value at `y` (must be outside every cell).
pub fn volume_potential<R: Real>(
    scene: &Scene<R>,
    y: Point3<R>,
    spec: &QuadratureSpec<R>,
) -> Result<Cplx<R>> {
    Ok(volume_potential_with_gradient(scene, y, spec)?.0)
}

/// Field gradient at `y`.
pub fn grad_volume_potential<R: Real>(
    scene: &Scene<R>,
    y: Point3<R>,
    spec: &QuadratureSpec<R>,
) -> Result<[Cplx<R>; 3]> {
    Ok(volume_potential_with_gradient(scene, y, spec)?.1)
}

/// Field and gradient in one pass.
pub fn volume_potential_with_gradient<R: Real>(
    scene: &Scene<R>,
    y: Point3<R>,
    spec: &QuadratureSpec<R>,
) -> Result<(Cplx<R>, [Cplx<R>; 3])> {
    for (ci, cell) in scene.cells.iter().enumerate() {
        if cell.polyhedron.contains(&y) {
            return Err(Error::PointInsideCell { cell: ci });
        }
    }
    let mesh = SourceMesh::for_targets(scene, std::slice::from_ref(&y), spec)?;
    Ok(evaluate_potential(scene, &mesh, y))
}

/// Potential and gradient at `y` over a prepared mesh.
pub fn evaluate_potential<R: Real>(
    scene: &Scene<R>,
    mesh: &SourceMesh<R>,
    y: Point3<R>,
) -> (Cplx<R>, [Cplx<R>; 3]) {
    let rule = TetRule::degree5();
    let kappa = scene.kappa;
    let norm = -real::<R>(0.25) / R::PI(); // -1/(4 pi)
    let mut u = Cplx::new(R::zero(), R::zero());
    let mut g = [Cplx::new(R::zero(), R::zero()); 3];
    for (cell, tets) in scene.cells.iter().zip(&mesh.cell_tets) {
        let acc: [Cplx<R>; 4] = fixed_quadrature(tets, &rule, |x| potential_kernel(kappa, x - y));
        let c = cell.amplitude * norm;
        u += acc[0] * c;
        g[0] += acc[1] * c;
        g[1] += acc[2] * c;
        g[2] += acc[3] * c;
    }
    (u, g)
}

/// Simulates Dirichlet and Neumann traces on the grid; node-parallel.
pub fn simulate_boundary<R: Real>(
    scene: &Scene<R>,
    grid: &SphereGrid<R>,
    spec: &QuadratureSpec<R>,
) -> Result<BoundaryField<R>> {
    let limit = scene.radius - scene.r0 + real(1e-12);
    for (ci, cell) in scene.cells.iter().enumerate() {
        for v in cell.polyhedron.vertices() {
            if v.norm() > limit {
                return Err(Error::SceneValidation(format!(
                    "cell {ci} reaches within r0 of the measurement sphere"
                )));
            }
        }
    }
    let targets: Vec<Point3<R>> = (0..grid.node_count())
        .map(|k| grid.point_by_index(k))
        .collect();
    // every node sits on the sphere, so grading against the radial
    // projections of the cell vertices bounds the node distances from below
    let mut grade_targets: Vec<Point3<R>> = Vec::new();
    for cell in &scene.cells {
        for v in cell.polyhedron.vertices() {
            let n = v.norm();
            if n > R::zero() {
                grade_targets.push(v.scale(grid.radius / n));
            }
        }
    }
    let mesh = SourceMesh::for_targets(scene, &grade_targets, spec)?;

    let results: Vec<(Cplx<R>, Cplx<R>)> = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            let y = targets[k];
            let (u, g) = evaluate_potential(scene, &mesh, y);
            let nhat = y.scale(R::one() / y.norm());
            let dnu = g[0] * nhat.x() + g[1] * nhat.y() + g[2] * nhat.z();
            (u, dnu)
        })
        .collect();

    Ok(BoundaryField {
        grid: grid.clone(),
        kappa: scene.kappa,
        u: results.iter().map(|r| r.0).collect(),
        dnu: results.iter().map(|r| r.1).collect(),
        neumann_kind: NeumannKind::Simulated,
    })
}

/// Discrete H^1 norm of the Dirichlet trace.
#[derive(Debug, Clone, Copy)]
pub struct H1Norm<R> {
    pub value: R,
    pub tail_fraction: R,
    pub band_limit_warning: bool,
}

/// ||u||_{H^1} = R sqrt( sum (1 + n(n+1)/R^2) |a_n^m|^2 ) from the
/// spherical-harmonic coefficients of u on the unit-measure expansion.
pub fn h1_norm<R: Real>(field: &BoundaryField<R>) -> Result<H1Norm<R>> {
    let coeffs = dtn::analyze(&field.grid, &field.u)?;
    let radius = field.grid.radius;
    let mut total = R::zero();
    for n in 0..=coeffs.band_limit {
        let nf = real::<R>(n as f64);
        let factor = R::one() + nf * (nf + R::one()) / (radius * radius);
        total += coeffs.degree_energy(n) * factor;
    }
    let tail = coeffs.tail_fraction();
    Ok(H1Norm {
        value: radius * total.sqrt(),
        tail_fraction: tail,
        band_limit_warning: tail > real(0.01),
    })
}

/// Adds an independent complex Gaussian perturbation to the Dirichlet trace
/// (standard deviation level * rms(u), split evenly between the real and
/// imaginary parts) and re-derives the Neumann trace through the exterior
/// map, so noise enters the Dirichlet data only. Deterministic per seed.
pub fn add_noise<R: Real>(
    field: &BoundaryField<R>,
    level: R,
    seed: u64,
) -> Result<BoundaryField<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = level * field.rms_u();
    let comp = sigma / real::<R>(2.0).sqrt();
    let mut u = Vec::with_capacity(field.u.len());
    for v in &field.u {
        // Box-Muller keeps the dependency surface small and the stream
        // reproducible across platforms
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let mag = (-2.0 * u1.ln()).sqrt();
        let z_re = real::<R>(mag * (2.0 * std::f64::consts::PI * u2).cos());
        let z_im = real::<R>(mag * (2.0 * std::f64::consts::PI * u2).sin());
        u.push(v + Cplx::new(z_re * comp, z_im * comp));
    }
    let out = dtn::dtn_apply(&field.grid, &u, field.kappa)?;
    Ok(BoundaryField {
        grid: field.grid.clone(),
        kappa: field.kappa,
        u,
        dnu: out.neumann,
        neumann_kind: NeumannKind::DtnDerived,
    })
}
