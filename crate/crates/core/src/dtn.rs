//! Exterior Dirichlet-to-Neumann map on the measurement sphere, realized
//! through spherical-harmonic analysis/synthesis and the radial ratio
//! h_n^{(1)'}(kappa R) / h_n^{(1)}(kappa R).
//!
//! The radiating exterior solution with Dirichlet trace Y_n^m on the sphere
//! is h_n^{(1)}(kappa r)/h_n^{(1)}(kappa R) Y_n^m, so the map is diagonal
//! per degree with eigenvalue kappa h'/h. For degrees far above kappa R the
//! Hankel values overflow, so the eigenvalue is computed by an upward
//! recurrence on the ratio h_n/h_{n-1} itself.

use crate::error::{Error, Result};
use crate::forward::SphereGrid;
use crate::num::{imag_unit, real, Cplx, Real};

/// Packed spherical-harmonic coefficients a_n^m, 0 <= n <= L, |m| <= n.
/// Index layout: n^2 + (m + n).
#[derive(Debug, Clone)]
pub struct HarmonicCoefficients<R> {
    pub band_limit: usize,
    pub coeffs: Vec<Cplx<R>>,
}

impl<R: Real> HarmonicCoefficients<R> {
    pub fn zero(band_limit: usize) -> Self {
        HarmonicCoefficients {
            band_limit,
            coeffs: vec![Cplx::new(R::zero(), R::zero()); (band_limit + 1) * (band_limit + 1)],
        }
    }

    #[inline]
    pub fn index(n: usize, m: isize) -> usize {
        n * n + (m + n as isize) as usize
    }

    pub fn get(&self, n: usize, m: isize) -> Cplx<R> {
        self.coeffs[Self::index(n, m)]
    }

    pub fn set(&mut self, n: usize, m: isize, v: Cplx<R>) {
        self.coeffs[Self::index(n, m)] = v;
    }

    /// Sum of |a_n^m|^2 over one degree n.
    pub fn degree_energy(&self, n: usize) -> R {
        let mut e = R::zero();
        for m in -(n as isize)..=(n as isize) {
            e += self.get(n, m).norm_sqr();
        }
        e
    }

    pub fn total_energy(&self) -> R {
        self.coeffs
            .iter()
            .map(|c| c.norm_sqr())
            .fold(R::zero(), |a, b| a + b)
    }

    /// Energy fraction in the top degree; a proxy for truncation error.
    pub fn tail_fraction(&self) -> R {
        let total = self.total_energy();
        if total == R::zero() {
            return R::zero();
        }
        self.degree_energy(self.band_limit) / total
    }
}

/// Orthonormal associated-Legendre values q_n^m(cos theta) for all
/// 0 <= m <= n <= L, with the Condon-Shortley phase. Y_n^m = q_n^m e^{i m phi}.
/// Index layout: n (n + 1) / 2 + m.
pub fn normalized_legendre_table<R: Real>(band_limit: usize, cos_theta: R) -> Vec<R> {
    let l = band_limit;
    let sin_theta = (R::one() - cos_theta * cos_theta).max(R::zero()).sqrt();
    let mut q = vec![R::zero(); (l + 1) * (l + 2) / 2];
    let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
    q[0] = (real::<R>(0.25) / R::PI()).sqrt();
    for m in 1..=l {
        let mf = real::<R>(m as f64);
        q[idx(m, m)] = -((real::<R>(2.0) * mf + R::one()) / (real::<R>(2.0) * mf)).sqrt()
            * sin_theta
            * q[idx(m - 1, m - 1)];
    }
    for m in 0..l {
        let mf = real::<R>(m as f64);
        q[idx(m + 1, m)] = (real::<R>(2.0) * mf + real(3.0)).sqrt() * cos_theta * q[idx(m, m)];
    }
    for m in 0..=l {
        for n in (m + 2)..=l {
            let nf = real::<R>(n as f64);
            let mf = real::<R>(m as f64);
            let a = ((real::<R>(4.0) * nf * nf - R::one()) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - R::one()) * (nf - R::one()) - mf * mf)
                / (real::<R>(4.0) * (nf - R::one()) * (nf - R::one()) - R::one()))
            .sqrt();
            q[idx(n, m)] = a * (cos_theta * q[idx(n - 1, m)] - b * q[idx(n - 2, m)]);
        }
    }
    q
}

/// d q_n^m / d theta via q_{n-1}^m; valid away from the poles.
pub fn normalized_legendre_theta_derivative<R: Real>(
    band_limit: usize,
    cos_theta: R,
    table: &[R],
) -> Vec<R> {
    let l = band_limit;
    let sin_theta = (R::one() - cos_theta * cos_theta).max(real(1e-300)).sqrt();
    let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut d = vec![R::zero(); table.len()];
    for n in 0..=l {
        for m in 0..=n {
            let nf = real::<R>(n as f64);
            let mf = real::<R>(m as f64);
            let below = if n >= 1 && m < n {
                let c = ((real::<R>(2.0) * nf + R::one()) / (real::<R>(2.0) * nf - R::one())
                    * (nf * nf - mf * mf))
                    .sqrt();
                c * table[idx(n - 1, m)]
            } else {
                R::zero()
            };
            d[idx(n, m)] = (nf * cos_theta * table[idx(n, m)] - below) / sin_theta;
        }
    }
    d
}

/// Forward transform: a_n^m = ∫ u conj(Y_n^m) dσ on the unit sphere,
/// computed with the grid quadrature (exact for band-limited inputs).
pub fn analyze<R: Real>(
    grid: &SphereGrid<R>,
    values: &[Cplx<R>],
) -> Result<HarmonicCoefficients<R>> {
    let l = grid.band_limit;
    if values.len() != grid.node_count() {
        return Err(Error::BandLimitMismatch {
            grid: grid.node_count(),
            requested: values.len(),
        });
    }
    let n_phi = grid.n_phi;
    let two_pi = real::<R>(2.0) * R::PI();
    let mut out = HarmonicCoefficients::zero(l);

    // phi DFT per theta row: F_i^m = sum_j u_ij e^{-i m phi_j}
    for (i, &ct) in grid.cos_thetas.iter().enumerate() {
        let mut row_dft = vec![Cplx::new(R::zero(), R::zero()); 2 * l + 1];
        for j in 0..n_phi {
            let u = values[i * n_phi + j];
            for (mi, mm) in (-(l as isize)..=(l as isize)).enumerate() {
                let ang = -real::<R>(mm as f64) * grid.phis[j];
                row_dft[mi] += u * Cplx::from_polar(R::one(), ang);
            }
        }
        // unit-sphere measure: the R^2 of the surface weight cancels
        let w_theta = grid.gl_weights[i] * (two_pi / real(n_phi as f64));
        let table = normalized_legendre_table(l, ct);
        let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
        for n in 0..=l {
            for m in -(n as isize)..=(n as isize) {
                let ma = m.unsigned_abs();
                let mut q = table[idx(n, ma)];
                if m < 0 && ma % 2 == 1 {
                    q = -q;
                }
                let mi = (m + l as isize) as usize;
                let contrib = row_dft[mi] * q * w_theta;
                let k = HarmonicCoefficients::<R>::index(n, m);
                out.coeffs[k] += contrib;
            }
        }
    }
    Ok(out)
}

/// Inverse transform onto the grid nodes.
pub fn synthesize<R: Real>(
    coeffs: &HarmonicCoefficients<R>,
    grid: &SphereGrid<R>,
) -> Result<Vec<Cplx<R>>> {
    let l = coeffs.band_limit;
    if l > grid.band_limit {
        return Err(Error::BandLimitMismatch {
            grid: grid.band_limit,
            requested: l,
        });
    }
    let n_phi = grid.n_phi;
    let mut values = vec![Cplx::new(R::zero(), R::zero()); grid.node_count()];
    for (i, &ct) in grid.cos_thetas.iter().enumerate() {
        let table = normalized_legendre_table(l, ct);
        let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
        // accumulate G_i^m = sum_n a_n^m q_n^m(theta_i)
        let mut g = vec![Cplx::new(R::zero(), R::zero()); 2 * l + 1];
        for n in 0..=l {
            for m in -(n as isize)..=(n as isize) {
                let ma = m.unsigned_abs();
                let mut q = table[idx(n, ma)];
                if m < 0 && ma % 2 == 1 {
                    q = -q;
                }
                g[(m + l as isize) as usize] += coeffs.get(n, m) * q;
            }
        }
        for j in 0..n_phi {
            let mut v = Cplx::new(R::zero(), R::zero());
            for (mi, mm) in (-(l as isize)..=(l as isize)).enumerate() {
                let ang = real::<R>(mm as f64) * grid.phis[j];
                v += g[mi] * Cplx::from_polar(R::one(), ang);
            }
            values[i * n_phi + j] = v;
        }
    }
    Ok(values)
}

/// Band-limited evaluation at one point (theta, phi).
pub fn point_synthesize<R: Real>(coeffs: &HarmonicCoefficients<R>, theta: R, phi: R) -> Cplx<R> {
    let l = coeffs.band_limit;
    let table = normalized_legendre_table(l, theta.cos());
    let idx = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut v = Cplx::new(R::zero(), R::zero());
    for n in 0..=l {
        for m in -(n as isize)..=(n as isize) {
            let ma = m.unsigned_abs();
            let mut q = table[idx(n, ma)];
            if m < 0 && ma % 2 == 1 {
                q = -q;
            }
            let ang = real::<R>(m as f64) * phi;
            v += coeffs.get(n, m) * q * Cplx::from_polar(R::one(), ang);
        }
    }
    v
}

/// Spherical Hankel function of the first kind and its derivative, by the
/// upward recurrence from the closed forms of h_0 and h_1. Stable upward
/// because the Neumann part grows with the order.
pub fn spherical_hankel<R: Real>(n: usize, z: R) -> Result<(Cplx<R>, Cplx<R>)> {
    if z <= R::zero() {
        return Err(Error::NonPositiveArgument {
            z: z.to_f64().unwrap_or(f64::NAN),
        });
    }
    let i = imag_unit::<R>();
    let e = Cplx::from_polar(R::one(), z);
    let h0 = -i * e / z;
    let h1 = -e * (Cplx::new(z, R::zero()) + i) / (z * z);
    let (hn, hn_minus_1) = match n {
        0 => (h0, Cplx::new(R::zero(), R::zero())),
        1 => (h1, h0),
        _ => {
            let mut hm1 = h0;
            let mut h = h1;
            for k in 1..n {
                let c = real::<R>((2 * k + 1) as f64) / z;
                let next = h * c - hm1;
                hm1 = h;
                h = next;
            }
            (h, hm1)
        }
    };
    let deriv = if n == 0 {
        -h1
    } else {
        hn_minus_1 - hn * (real::<R>((n + 1) as f64) / z)
    };
    Ok((hn, deriv))
}

/// Spherical Bessel j_0..j_n by Miller's downward recurrence (stable for
/// orders above the argument), normalized with j_0 = sin z / z.
pub fn spherical_bessel_j<R: Real>(n_max: usize, z: R) -> Result<Vec<R>> {
    if z <= R::zero() {
        return Err(Error::NonPositiveArgument {
            z: z.to_f64().unwrap_or(f64::NAN),
        });
    }
    let start = n_max + (z.to_f64().unwrap_or(0.0) as usize) + 24;
    let mut vals = vec![R::zero(); start + 2];
    vals[start + 1] = R::zero();
    vals[start] = real(1e-30);
    for k in (0..start).rev() {
        let c = real::<R>((2 * k + 3) as f64) / z;
        vals[k] = c * vals[k + 1] - vals[k + 2];
    }
    let scale = (z.sin() / z) / vals[0];
    Ok(vals[..=n_max].iter().map(|v| *v * scale).collect())
}

/// Exterior map eigenvalue kappa h_n'(kappa R) / h_n(kappa R), computed via
/// the upward recurrence on the ratio rho_n = h_n / h_{n-1}; no overflow for
/// n far above kappa R.
pub fn dtn_eigenvalue<R: Real>(n: usize, kappa: R, radius: R) -> Result<Cplx<R>> {
    let z = kappa * radius;
    if z <= R::zero() {
        return Err(Error::NonPositiveArgument {
            z: z.to_f64().unwrap_or(f64::NAN),
        });
    }
    // rho_0 := h_0 / h_{-1} with h_{-1} = e^{iz}/z
    let mut rho = -imag_unit::<R>();
    for k in 1..=n {
        let c = real::<R>((2 * k - 1) as f64) / z;
        rho = Cplx::new(c, R::zero()) - rho.inv();
    }
    // h_n'/h_n = 1/rho_n - (n+1)/z
    let ratio = rho.inv() - Cplx::new(real::<R>((n + 1) as f64) / z, R::zero());
    Ok(ratio * kappa)
}

/// Result of applying the exterior map to Dirichlet data.
#[derive(Debug, Clone)]
pub struct DtnOutput<R> {
    pub neumann: Vec<Cplx<R>>,
    pub tail_fraction: R,
    pub band_limit_warning: bool,
}

/// Neumann trace from Dirichlet data: analyze, multiply each degree by the
/// exterior eigenvalue, synthesize. Flags a warning when more than 1% of
/// the energy sits in the top resolvable degree.
pub fn dtn_apply<R: Real>(
    grid: &SphereGrid<R>,
    dirichlet: &[Cplx<R>],
    kappa: R,
) -> Result<DtnOutput<R>> {
    let mut coeffs = analyze(grid, dirichlet)?;
    let tail = coeffs.tail_fraction();
    for n in 0..=coeffs.band_limit {
        let lambda = dtn_eigenvalue(n, kappa, grid.radius)?;
        for m in -(n as isize)..=(n as isize) {
            let k = HarmonicCoefficients::<R>::index(n, m);
            coeffs.coeffs[k] *= lambda;
        }
    }
    let neumann = synthesize(&coeffs, grid)?;
    Ok(DtnOutput {
        neumann,
        tail_fraction: tail,
        band_limit_warning: tail > real(0.01),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::SphereGrid;

    fn grid(l: usize, radius: f64) -> SphereGrid<f64> {
        SphereGrid::new(radius, l)
    }

    #[test]
    fn constant_has_only_the_monopole_coefficient() {
        let g = grid(8, 2.0);
        let values = vec![Cplx::new(1.0, 0.0); g.node_count()];
        let c = analyze(&g, &values).unwrap();
        let a00 = c.get(0, 0);
        assert!((a00.re - (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(a00.im.abs() < 1e-14);
        for n in 1..=8usize {
            for m in -(n as isize)..=(n as isize) {
                assert!(c.get(n, m).norm() < 1e-12, "leak at ({n},{m})");
            }
        }
    }

    #[test]
    fn delta_coefficient_round_trip_is_orthonormal() {
        let g = grid(6, 1.0);
        let mut c = HarmonicCoefficients::zero(6);
        c.set(3, 2, Cplx::new(1.0, 0.0));
        let vals = synthesize(&c, &g).unwrap();
        let back = analyze(&g, &vals).unwrap();
        for n in 0..=6usize {
            for m in -(n as isize)..=(n as isize) {
                let want = if n == 3 && m == 2 { 1.0 } else { 0.0 };
                assert!(
                    (back.get(n, m) - Cplx::new(want, 0.0)).norm() < 1e-12,
                    "({n},{m})"
                );
            }
        }
    }

    #[test]
    fn analyze_synthesize_round_trip_on_random_band_limited_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let l = 10;
        let g = grid(l, 1.3);
        let mut c = HarmonicCoefficients::zero(l);
        for n in 0..=l {
            for m in -(n as isize)..=(n as isize) {
                c.set(
                    n,
                    m,
                    Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
        }
        let vals = synthesize(&c, &g).unwrap();
        let back = analyze(&g, &vals).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in c.coeffs.iter().zip(&back.coeffs) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-10, "round trip error {worst}");

        // Parseval against the grid quadrature (unit-sphere measure)
        let norm_sq_grid: f64 = vals
            .iter()
            .enumerate()
            .map(|(k, v)| v.norm_sqr() * g.weight_by_index(k) / (g.radius * g.radius))
            .sum();
        let parseval: f64 = c.total_energy();
        assert!((norm_sq_grid - parseval).abs() < 1e-10 * parseval.max(1.0));
    }

    #[test]
    fn hankel_closed_forms_and_wronskian() {
        // h_0(1) = -i e^{i}
        let (h0, _) = spherical_hankel(0, 1.0f64).unwrap();
        let want = -Cplx::<f64>::i() * Cplx::from_polar(1.0, 1.0);
        assert!((h0 - want).norm() < 1e-14);
        // h_1(2) = -e^{2i}(2+i)/4
        let (h1, _) = spherical_hankel(1, 2.0f64).unwrap();
        let want = -Cplx::from_polar(1.0, 2.0) * Cplx::new(2.0, 1.0) / 4.0;
        assert!((h1 - want).norm() < 1e-14);
        // Wronskian j_n h_n' - j_n' h_n = i / z^2
        for &z in &[1.0f64, 5.0, 20.0] {
            let j = spherical_bessel_j(21, z).unwrap();
            for n in 0..=20usize {
                let (hn, hpn) = spherical_hankel(n, z).unwrap();
                let jp = if n == 0 {
                    -j[1]
                } else {
                    j[n - 1] - (n as f64 + 1.0) / z * j[n]
                };
                let w = hpn * j[n] - hn * jp;
                let want = Cplx::new(0.0, 1.0 / (z * z));
                assert!(
                    (w - want).norm() < 1e-9 * want.norm(),
                    "z={z} n={n}: {w} vs {want}"
                );
            }
        }
    }

    #[test]
    fn dtn_eigenvalue_matches_direct_ratio_and_monopole_closed_form() {
        let kappa = 2.0f64;
        let radius = 1.0f64;
        let l0 = dtn_eigenvalue(0, kappa, radius).unwrap();
        let want = Cplx::new(-1.0 / radius, kappa);
        assert!((l0 - want).norm() < 1e-13, "{l0} vs {want}");
        for n in 0..40usize {
            let z = kappa * radius;
            let (h, hp) = spherical_hankel(n, z).unwrap();
            let direct = hp / h * kappa;
            let fast = dtn_eigenvalue(n, kappa, radius).unwrap();
            assert!(
                (fast - direct).norm() < 1e-10 * direct.norm(),
                "n={n}: {fast} vs {direct}"
            );
        }
        // very large degree: no overflow
        let big = dtn_eigenvalue(400, 2.0f64, 1.0).unwrap();
        assert!(big.norm().is_finite());
        // asymptotically lambda_n ~ -n/R
        assert!((big.re + 400.0).abs() < 10.0, "{big}");
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let g = grid(6, 1.0);
        let z = vec![Cplx::new(0.0, 0.0); g.node_count()];
        let out = dtn_apply(&g, &z, 1.5).unwrap();
        assert!(out.neumann.iter().all(|v| v.norm() == 0.0));
        assert!(!out.band_limit_warning);
    }

    #[test]
    fn dtn_commutes_with_rotations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let l = 8;
        let g = grid(l, 1.0);
        let kappa = 1.7;
        // band-limited test function from random coefficients (top degree
        // empty so the rotated field stays resolvable)
        let mut c = HarmonicCoefficients::zero(l);
        for n in 0..l {
            for m in -(n as isize)..=(n as isize) {
                c.set(
                    n,
                    m,
                    Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
        }
        // rotation about z by a fixed angle: phi -> phi + gamma maps the
        // grid onto itself up to the phi-offset, realized by point synthesis
        let gamma = 0.7341;
        let mut rotated = Vec::with_capacity(g.node_count());
        for i in 0..g.n_theta {
            let theta = g.thetas[i];
            for j in 0..g.n_phi {
                rotated.push(point_synthesize(&c, theta, g.phis[j] + gamma));
            }
        }
        let direct = dtn_apply(&g, &rotated, kappa).unwrap().neumann;
        // rotate after applying the map
        let base = synthesize(&c, &g).unwrap();
        let dtn_base = dtn_apply(&g, &base, kappa).unwrap().neumann;
        let coeffs_dtn = analyze(&g, &dtn_base).unwrap();
        let mut after = Vec::with_capacity(g.node_count());
        for i in 0..g.n_theta {
            let theta = g.thetas[i];
            for j in 0..g.n_phi {
                after.push(point_synthesize(&coeffs_dtn, theta, g.phis[j] + gamma));
            }
        }
        let mut worst = 0.0f64;
        for (a, b) in direct.iter().zip(&after) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-8, "rotation equivariance violated: {worst}");
    }

    #[test]
    fn boundedness_surrogate_is_stable() {
        use rand::{Rng, SeedableRng};
        // ||N u||_{L2} <= C(kappa, R, L) h1(u): measure C on one batch of
        // random band-limited inputs, assert a fresh batch stays within 10%
        let l = 10;
        let radius = 1.3;
        let kappa = 1.9;
        let g = grid(l, radius);
        let ratio = |seed: u64| -> f64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut c = HarmonicCoefficients::zero(l);
            for n in 0..=l {
                for m in -(n as isize)..=(n as isize) {
                    c.set(
                        n,
                        m,
                        Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    );
                }
            }
            let u = synthesize(&c, &g).unwrap();
            let nu = dtn_apply(&g, &u, kappa).unwrap().neumann;
            let l2: f64 = nu
                .iter()
                .enumerate()
                .map(|(k, v)| v.norm_sqr() * g.weight_by_index(k))
                .sum::<f64>()
                .sqrt();
            let field = crate::forward::BoundaryField {
                grid: g.clone(),
                kappa,
                u,
                dnu: nu,
                neumann_kind: crate::forward::NeumannKind::DtnDerived,
            };
            let h1 = crate::forward::h1_norm(&field).unwrap().value;
            l2 / h1
        };
        let c_measured = (0..8).map(ratio).fold(0.0f64, f64::max);
        for seed in 100..120u64 {
            let r = ratio(seed);
            assert!(
                r <= 1.1 * c_measured,
                "ratio {r} escapes the measured constant {c_measured}"
            );
        }
    }
}
