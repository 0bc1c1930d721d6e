//! Numerical integration: Gauss-Legendre line rules, Grundmann-Moller
//! simplex rules (degrees 3 and 5), and a distance-graded adaptive engine
//! for integrands that blow up toward an evaluation point outside the cell.

use crate::error::{Error, Result};
use crate::geometry::{Point3, Tetrahedron};
use crate::num::{real, Cplx, Real};

/// Gauss-Legendre nodes and weights on (-1, 1); Newton iteration on P_n.
pub fn gauss_legendre<R: Real>(n: usize) -> (Vec<R>, Vec<R>) {
    assert!(n >= 1);
    let mut nodes = vec![R::zero(); n];
    let mut weights = vec![R::zero(); n];
    let nf = real::<R>(n as f64);
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess
        let theta =
            real::<R>(std::f64::consts::PI) * (real::<R>(i as f64) + real(0.75)) / (nf + real(0.5));
        let mut x = theta.cos();
        let mut dp = R::one();
        for _ in 0..100 {
            // P_n(x) and P_{n-1}(x) by upward recurrence
            let mut p0 = R::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = real::<R>(k as f64);
                let p2 = ((real::<R>(2.0) * kf - R::one()) * x * p1 - (kf - R::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { R::one() } else { p0 };
            dp = nf * (pn1 - x * pn) / (R::one() - x * x);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < real(1e-16) {
                break;
            }
        }
        let w = real::<R>(2.0) / ((R::one() - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Values the engine can accumulate: reals, complex values, or small
/// stacked arrays of them.
pub trait Accumulate<R: Real>: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: R) -> Self;
    fn magnitude(&self) -> R;
}

impl<R: Real> Accumulate<R> for R {
    fn zero() -> Self {
        R::zero()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: R) -> Self {
        self * s
    }
    fn magnitude(&self) -> R {
        self.abs()
    }
}

impl<R: Real> Accumulate<R> for Cplx<R> {
    fn zero() -> Self {
        Cplx::new(R::zero(), R::zero())
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: R) -> Self {
        self * s
    }
    fn magnitude(&self) -> R {
        self.norm()
    }
}

/// Value plus gradient, integrated together.
impl<R: Real> Accumulate<R> for [Cplx<R>; 4] {
    fn zero() -> Self {
        [Cplx::new(R::zero(), R::zero()); 4]
    }
    fn add(self, o: Self) -> Self {
        [
            self[0] + o[0],
            self[1] + o[1],
            self[2] + o[2],
            self[3] + o[3],
        ]
    }
    fn scale(self, s: R) -> Self {
        [self[0] * s, self[1] * s, self[2] * s, self[3] * s]
    }
    fn magnitude(&self) -> R {
        self.iter()
            .map(|c| c.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
            .sqrt()
    }
}

/// Grundmann-Moller rule on the unit simplex, exactness degree 2s+1.
/// Barycentric nodes and weights; weights sum to 1/6 (the simplex volume).
fn grundmann_moller<R: Real>(s: usize) -> (Vec<[R; 4]>, Vec<R>) {
    let d = 3usize;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let factorial = |m: usize| -> f64 { (1..=m).map(|v| v as f64).product::<f64>().max(1.0) };
    for i in 0..=s {
        let sigma = s - i;
        let denom = (d + 1 + 2 * sigma) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let w = sign * 0.25f64.powi(s as i32) * denom.powi(2 * s as i32 + 1)
            / (factorial(i) * factorial(2 * s + d + 1 - i));
        // all k in N_0^4 with |k| = sigma
        for k0 in 0..=sigma {
            for k1 in 0..=(sigma - k0) {
                for k2 in 0..=(sigma - k0 - k1) {
                    let k3 = sigma - k0 - k1 - k2;
                    let bary = [
                        real::<R>((2 * k0 + 1) as f64 / denom),
                        real::<R>((2 * k1 + 1) as f64 / denom),
                        real::<R>((2 * k2 + 1) as f64 / denom),
                        real::<R>((2 * k3 + 1) as f64 / denom),
                    ];
                    nodes.push(bary);
                    weights.push(real::<R>(w));
                }
            }
        }
    }
    (nodes, weights)
}

/// Fixed-degree rule applied to one tetrahedron.
pub struct TetRule<R> {
    nodes: Vec<[R; 4]>,
    weights: Vec<R>,
}

impl<R: Real> TetRule<R> {
    pub fn degree5() -> Self {
        let (nodes, weights) = grundmann_moller(2);
        TetRule { nodes, weights }
    }

    pub fn degree3() -> Self {
        let (nodes, weights) = grundmann_moller(1);
        TetRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `tet` (weights carry the 6 * volume scaling).
    pub fn integrate<T, F>(&self, tet: &Tetrahedron<R>, mut f: F) -> T
    where
        T: Accumulate<R>,
        F: FnMut(Point3<R>) -> T,
    {
        let scale = real::<R>(6.0) * tet.volume();
        let [a, b, c, d] = tet.corners;
        let mut acc = T::zero();
        for (bary, w) in self.nodes.iter().zip(&self.weights) {
            let p = a.scale(bary[0]) + b.scale(bary[1]) + c.scale(bary[2]) + d.scale(bary[3]);
            acc = acc.add(f(p).scale(*w * scale));
        }
        acc
    }
}

/// Controls for the graded adaptive engine.
#[derive(Debug, Clone)]
pub struct QuadratureSpec<R> {
    /// Absolute floor on the accumulated error estimate (guards integrals
    /// that vanish by symmetry).
    pub abs_tol: R,
    /// Relative target: stop once the error estimate drops below
    /// rel_tol * |accumulated value|.
    pub rel_tol: R,
    /// Hard cap on tetra edge length (set to 0.2/kappa to resolve the
    /// kernel oscillation); `None` disables.
    pub osc_max_edge: Option<R>,
    /// Grading rule: edge <= dist_ratio * dist(tet, target).
    pub dist_ratio: R,
    /// Refinement budget (number of tetrahedra after splitting).
    pub max_tets: usize,
}

impl<R: Real> QuadratureSpec<R> {
    pub fn new(abs_tol: R) -> Self {
        QuadratureSpec {
            abs_tol,
            rel_tol: real(1e-6),
            osc_max_edge: None,
            dist_ratio: real(1.0 / 3.0),
            max_tets: 400_000,
        }
    }

    pub fn with_relative_tolerance(mut self, rel_tol: R) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_oscillation_cap(mut self, kappa: R) -> Self {
        self.osc_max_edge = Some(real::<R>(0.2) / kappa);
        self
    }
}

/// Uniformly bisects until every tetra satisfies the oscillation edge cap.
pub fn enforce_edge_cap<R: Real>(tets: Vec<Tetrahedron<R>>, cap: Option<R>) -> Vec<Tetrahedron<R>> {
    let cap = match cap {
        Some(c) => c,
        None => return tets,
    };
    let mut out = Vec::with_capacity(tets.len());
    let mut stack = tets;
    while let Some(t) = stack.pop() {
        if t.longest_edge() > cap {
            let (a, b) = t.bisect();
            stack.push(a);
            stack.push(b);
        } else {
            out.push(t);
        }
    }
    out
}

/// Splits until every tetra satisfies edge <= dist_ratio * dist(tet, target)
/// for every target, on top of the oscillation cap. Errors when a target
/// touches the mesh (distance ~ 0 cannot be graded).
pub fn grade_toward_targets<R: Real>(
    tets: Vec<Tetrahedron<R>>,
    targets: &[Point3<R>],
    spec: &QuadratureSpec<R>,
) -> Result<Vec<Tetrahedron<R>>> {
    let mut out = Vec::with_capacity(tets.len());
    let mut stack = enforce_edge_cap(tets, spec.osc_max_edge);
    let tiny = real::<R>(1e-13);
    while let Some(t) = stack.pop() {
        if out.len() + stack.len() > spec.max_tets {
            return Err(Error::QuadratureBudget {
                achieved: f64::INFINITY,
                estimate: 0.0,
            });
        }
        let mut needs_split = false;
        let edge = t.longest_edge();
        for y in targets {
            let dist = t.distance_to_point(y);
            if dist < tiny {
                // a quadrature target inside or on the cell
                return Err(Error::PointInsideCell { cell: usize::MAX });
            }
            if edge > spec.dist_ratio * dist {
                needs_split = true;
                break;
            }
        }
        if needs_split {
            let (a, b) = t.bisect();
            stack.push(a);
            stack.push(b);
        } else {
            out.push(t);
        }
    }
    Ok(out)
}

/// Integral over a fixed tetra list with the degree-5 rule; no refinement.
pub fn fixed_quadrature<R, T, F>(tets: &[Tetrahedron<R>], rule: &TetRule<R>, mut f: F) -> T
where
    R: Real,
    T: Accumulate<R>,
    F: FnMut(Point3<R>) -> T,
{
    let mut acc = T::zero();
    for t in tets {
        acc = acc.add(rule.integrate(t, &mut f));
    }
    acc
}

/// Graded adaptive integral of `f` over the cell mesh `tets`, refined toward
/// `target`. Error estimate from the embedded degree-3 rule; splits the
/// worst tetra (max-heap, deterministic tie-break by insertion order) until
/// the estimate meets max(abs_tol, rel_tol |value|) or the budget runs out
/// (then errors, reporting the achieved estimate).
pub fn adaptive_quadrature<R, T, F>(
    tets: Vec<Tetrahedron<R>>,
    target: Point3<R>,
    spec: &QuadratureSpec<R>,
    mut f: F,
) -> Result<(T, R)>
where
    R: Real,
    T: Accumulate<R>,
    F: FnMut(Point3<R>) -> T,
{
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    let rule5 = TetRule::degree5();
    let rule3 = TetRule::degree3();
    let graded = grade_toward_targets(tets, std::slice::from_ref(&target), spec)?;

    struct Piece<R: Real, T> {
        err: R,
        seq: u64,
        tet: Tetrahedron<R>,
        value: T,
    }
    impl<R: Real, T> PartialEq for Piece<R, T> {
        fn eq(&self, other: &Self) -> bool {
            self.seq == other.seq
        }
    }
    impl<R: Real, T> Eq for Piece<R, T> {}
    impl<R: Real, T> PartialOrd for Piece<R, T> {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl<R: Real, T> Ord for Piece<R, T> {
        fn cmp(&self, other: &Self) -> Ordering {
            // errors are finite by construction; tie-break on insertion order
            self.err
                .partial_cmp(&other.err)
                .unwrap_or(Ordering::Equal)
                .then(other.seq.cmp(&self.seq))
        }
    }

    let eval = |tet: &Tetrahedron<R>, f: &mut F| -> (T, R) {
        let v5 = rule5.integrate(tet, &mut *f);
        let v3 = rule3.integrate(tet, &mut *f);
        let err = v5.add(v3.scale(-R::one())).magnitude();
        (v5, err)
    };

    let mut heap: BinaryHeap<Piece<R, T>> = BinaryHeap::with_capacity(graded.len());
    let mut seq = 0u64;
    let mut total_err = R::zero();
    let mut total_value = T::zero();
    for tet in graded {
        let (value, err) = eval(&tet, &mut f);
        total_err += err;
        total_value = total_value.add(value);
        heap.push(Piece {
            err,
            seq,
            tet,
            value,
        });
        seq += 1;
    }

    loop {
        let target_err = spec.abs_tol.max(spec.rel_tol * total_value.magnitude());
        if total_err <= target_err {
            break;
        }
        if heap.len() + 1 > spec.max_tets {
            return Err(Error::QuadratureBudget {
                achieved: total_err.to_f64().unwrap_or(f64::NAN),
                estimate: total_value.magnitude().to_f64().unwrap_or(f64::NAN),
            });
        }
        let piece = heap.pop().expect("heap nonempty");
        // a worst piece at roundoff level cannot be improved further
        if piece.err <= spec.abs_tol / real(1e6) {
            heap.push(piece);
            break;
        }
        total_err = (total_err - piece.err).max(R::zero());
        total_value = total_value.add(piece.value.scale(-R::one()));
        let (a, b) = piece.tet.bisect();
        for tet in [a, b] {
            let (value, err) = eval(&tet, &mut f);
            total_err += err;
            total_value = total_value.add(value);
            heap.push(Piece {
                err,
                seq,
                tet,
                value,
            });
            seq += 1;
        }
    }

    // exact resummation in insertion order for determinism
    let mut pieces: Vec<Piece<R, T>> = heap.into_vec();
    pieces.sort_by_key(|p| p.seq);
    let total = pieces.iter().fold(T::zero(), |acc, p| acc.add(p.value));
    let err = pieces.iter().map(|p| p.err).fold(R::zero(), |a, b| a + b);
    Ok((total, err))
}
