//! Integration invariants of the recovery pipeline.

use corner_probe::forward::{simulate_boundary, SphereGrid};
use corner_probe::geometry::Scene;
use corner_probe::quadrature::QuadratureSpec;
use corner_probe::recon::{reconstruct, AmplitudeSource, ReconOptions};

fn load(name: &str) -> Scene<f64> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenes")
        .join(name);
    corner_probe::io::load_scene(&path).unwrap()
}

#[test]
fn reports_are_bitwise_deterministic() {
    let scene = load("two_cells.toml");
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(scene.radius, 12);
    let field = simulate_boundary(&scene, &grid, &spec).unwrap();
    let mut options = ReconOptions::new(scene.r0);
    options.quad = spec;
    let a = reconstruct(&scene, &field, &options).unwrap();
    let b = reconstruct(&scene, &field, &options).unwrap();
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.estimate, y.estimate);
        assert_eq!(x.corner_estimate, y.corner_estimate);
        assert_eq!(x.corner_moments, y.corner_moments);
    }
}

/// Chain scene whose admissible stripping order is unique: the slab's far
/// vertices are blocked by the first cube, the small cube's vertices are
/// all within 3 r0 of the slab, so the order must be cube, slab, small cube.
fn forced_chain_scene() -> Scene<f64> {
    use corner_probe::geometry::{Cell, ConvexPolyhedron, Point3};
    use corner_probe::Complex;
    let x = ConvexPolyhedron::axis_aligned_box(
        Point3::new(-0.44, -0.04, -0.04),
        Point3::new(-0.36, 0.04, 0.04),
    )
    .unwrap();
    let y = ConvexPolyhedron::axis_aligned_box(
        Point3::new(-0.25, -0.06, -0.06),
        Point3::new(0.15, 0.06, 0.06),
    )
    .unwrap();
    let z = ConvexPolyhedron::axis_aligned_box(
        Point3::new(0.19, -0.03, -0.03),
        Point3::new(0.25, 0.03, 0.03),
    )
    .unwrap();
    Scene {
        kappa: 2.0,
        radius: 1.0,
        r0: 0.04,
        bound_a: 1.0,
        bound_e: 2.0,
        cells: vec![
            Cell {
                polyhedron: x,
                amplitude: Complex::new(0.9, 0.1),
                probe_vertex: None,
            },
            Cell {
                polyhedron: y,
                amplitude: Complex::new(-0.5, 0.6),
                probe_vertex: None,
            },
            Cell {
                polyhedron: z,
                amplitude: Complex::new(0.3, -0.7),
                probe_vertex: None,
            },
        ],
    }
}

#[test]
fn input_order_does_not_change_the_estimates() {
    // unique admissible order: permuted inputs reduce to identical
    // arithmetic, so the estimates agree to full precision
    let scene = forced_chain_scene();
    {
        let polys: Vec<_> = scene.cells.iter().map(|c| c.polyhedron.clone()).collect();
        let (perm, _) = corner_probe::geometry::order_cells(&polys, scene.r0).unwrap();
        assert_eq!(perm, vec![0, 1, 2], "chain order must be forced");
    }
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(scene.radius, 14);
    let field = simulate_boundary(&scene, &grid, &spec).unwrap();
    let mut options = ReconOptions::new(scene.r0);
    options.quad = spec.clone();
    let base_est = reconstruct(&scene, &field, &options)
        .unwrap()
        .estimates_in_input_order(3);

    let mapping = [2usize, 0, 1]; // permuted input i holds original cell mapping[i]
    let mut permuted = scene.clone();
    permuted.cells = mapping.iter().map(|&o| scene.cells[o].clone()).collect();
    {
        let polys: Vec<_> = permuted
            .cells
            .iter()
            .map(|c| c.polyhedron.clone())
            .collect();
        let (perm, _) = corner_probe::geometry::order_cells(&polys, permuted.r0).unwrap();
        assert_eq!(perm, vec![1, 2, 0], "same physical order after permutation");
    }
    let perm_est = reconstruct(&permuted, &field, &options)
        .unwrap()
        .estimates_in_input_order(3);
    for (i, &orig) in mapping.iter().enumerate() {
        let diff = (perm_est[i] - base_est[orig]).norm();
        assert!(
            diff < 1e-10,
            "cell {orig}: {:?} vs {:?}",
            perm_est[i],
            base_est[orig]
        );
    }
}

#[test]
fn free_permutations_agree_to_quadrature_accuracy() {
    // with several admissible orders the greedy tie-break follows the input
    // order; different stripping orders must still produce the same
    // amplitudes up to the data/quadrature error floor
    let scene = load("three_cells.toml");
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(scene.radius, 16);
    let field = simulate_boundary(&scene, &grid, &spec).unwrap();
    let mut options = ReconOptions::new(scene.r0);
    options.quad = spec.clone();
    let base_est = reconstruct(&scene, &field, &options)
        .unwrap()
        .estimates_in_input_order(3);
    let mapping = [2usize, 0, 1];
    let mut permuted = scene.clone();
    permuted.cells = mapping.iter().map(|&o| scene.cells[o].clone()).collect();
    let perm_est = reconstruct(&permuted, &field, &options)
        .unwrap()
        .estimates_in_input_order(3);
    for (i, &orig) in mapping.iter().enumerate() {
        let diff = (perm_est[i] - base_est[orig]).norm();
        assert!(
            diff < 1e-5,
            "cell {orig}: {:?} vs {:?}",
            perm_est[i],
            base_est[orig]
        );
    }
}

#[test]
fn negating_one_amplitude_only_flips_that_estimate() {
    let base = load("two_cells.toml");
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(base.radius, 14);
    let mut flipped = base.clone();
    flipped.cells[1].amplitude = -flipped.cells[1].amplitude;

    let mut options = ReconOptions::new(base.r0);
    options.quad = spec.clone();
    let f0 = simulate_boundary(&base, &grid, &spec).unwrap();
    let f1 = simulate_boundary(&flipped, &grid, &spec).unwrap();
    let r0 = reconstruct(&base, &f0, &options)
        .unwrap()
        .estimates_in_input_order(2);
    let r1 = reconstruct(&flipped, &f1, &options)
        .unwrap()
        .estimates_in_input_order(2);
    // cell 1 flips sign
    assert!(
        (r1[1] + r0[1]).norm() < 0.1 * base.cells[1].amplitude.norm(),
        "{:?} vs {:?}",
        r1[1],
        r0[1]
    );
    // cell 0 barely moves (cross-talk within 10%)
    assert!(
        (r1[0] - r0[0]).norm() < 0.1 * base.cells[0].amplitude.norm(),
        "{:?} vs {:?}",
        r1[0],
        r0[0]
    );
}

#[test]
fn exact_prefix_isolates_one_induction_step() {
    // with the first cells supplied exactly, the final step's error matches
    // the single-cell benchmark (within a factor 2)
    let scene = load("three_cells.toml");
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(scene.radius, 16);
    let field = simulate_boundary(&scene, &grid, &spec).unwrap();

    let mut single = scene.clone();
    single.cells = vec![scene.cells[2].clone()];
    let sfield = simulate_boundary(&single, &grid, &spec).unwrap();
    let mut options = ReconOptions::new(scene.r0);
    options.reference = Some(single.amplitudes());
    options.source = AmplitudeSource::Oracle;
    options.quad = spec.clone();
    let benchmark = reconstruct(&single, &sfield, &options).unwrap().cells[0]
        .reference_error
        .unwrap();

    let mut options = ReconOptions::new(scene.r0);
    options.reference = Some(scene.amplitudes());
    options.source = AmplitudeSource::Oracle;
    options.quad = spec.clone();
    options.fixed_prefix = vec![scene.cells[0].amplitude, scene.cells[1].amplitude];
    let report = reconstruct(&scene, &field, &options).unwrap();
    let step_err = report.cells.last().unwrap().reference_error.unwrap();
    assert!(
        step_err <= 2.0 * benchmark + 1e-9,
        "step error {step_err:.3e} vs benchmark {benchmark:.3e}"
    );
}

#[test]
fn amplitude_scaling_is_exact() {
    // doubling every amplitude doubles every estimate up to quadrature error
    let base = load("two_cells.toml");
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(base.radius, 14);
    let mut doubled = base.clone();
    for c in doubled.cells.iter_mut() {
        c.amplitude *= 2.0;
    }
    let mut options = ReconOptions::new(base.r0);
    options.quad = spec.clone();
    let e0 = reconstruct(
        &base,
        &simulate_boundary(&base, &grid, &spec).unwrap(),
        &options,
    )
    .unwrap()
    .estimates_in_input_order(2);
    let e1 = reconstruct(
        &doubled,
        &simulate_boundary(&doubled, &grid, &spec).unwrap(),
        &options,
    )
    .unwrap()
    .estimates_in_input_order(2);
    for (a, b) in e0.iter().zip(&e1) {
        assert!((b - a * 2.0).norm() < 1e-6 * a.norm().max(1e-12));
    }
}

#[test]
fn s0_on_the_paper_shell_is_controlled_by_the_data_norm() {
    // |S_0(y)| <= C eps on the shell; C measured on clean data and asserted
    // (with a safety factor) on noisy data
    use corner_probe::forward::{add_noise, h1_norm};
    use corner_probe::geometry::{probe_frame, Point3};
    use corner_probe::probe::s_k;

    let scene = load("two_cells.toml");
    let spec = QuadratureSpec::new(1e-9);
    // dense grid: the shell probes sit close to the sphere
    let grid = SphereGrid::new(scene.radius, 96);
    let clean = simulate_boundary(&scene, &grid, &spec).unwrap();
    let polys: Vec<_> = scene.cells.iter().map(|c| c.polyhedron.clone()).collect();
    let (perm, verts) = corner_probe::geometry::order_cells(&polys, scene.r0).unwrap();
    let scene = scene.reordered(&perm, &verts);
    let frame = probe_frame(&scene.designated_cone(0).unwrap());

    let probes: Vec<Point3<f64>> = (0..8)
        .map(|t| {
            let z = -1.0 + 2.0 * (t as f64 + 0.5) / 8.0;
            let phi = 2.399963229728653 * t as f64;
            let s = (1.0f64 - z * z).sqrt();
            Point3::new(s * phi.cos(), s * phi.sin(), z).scale(scene.radius + 0.75 * scene.r0)
        })
        .collect();

    let eps_clean = h1_norm(&clean).unwrap().value;
    let mut c_measured = 0.0f64;
    for y in &probes {
        let s0 = s_k(&clean, &scene, &[], &frame, *y, &spec).unwrap();
        c_measured = c_measured.max(s0.norm() / eps_clean);
    }
    assert!(c_measured.is_finite() && c_measured > 0.0);

    let noisy = add_noise(&clean, 0.02, 3).unwrap();
    let eps_noisy = h1_norm(&noisy).unwrap().value;
    for y in &probes {
        let s0 = s_k(&noisy, &scene, &[], &frame, *y, &spec).unwrap();
        assert!(
            s0.norm() <= 3.0 * c_measured * eps_noisy,
            "|S_0| = {} vs C eps = {}",
            s0.norm(),
            c_measured * eps_noisy
        );
    }
}

#[test]
fn single_radius_bias_decays_toward_the_two_term_fit() {
    use corner_probe::geometry::probe_frame;
    use corner_probe::kernels::Wavenumber;
    use corner_probe::probe::volume_moment;
    use corner_probe::recon::{corner_moment, estimate_amplitude, FitMode};

    let full = load("three_cells.toml");
    let mut scene = full.clone();
    scene.cells = vec![full.cells[2].clone()];
    let spec = QuadratureSpec::new(1e-10);
    let polys: Vec<_> = scene.cells.iter().map(|c| c.polyhedron.clone()).collect();
    let (perm, verts) = corner_probe::geometry::order_cells(&polys, scene.r0).unwrap();
    let scene = scene.reordered(&perm, &verts);
    let cone = scene.designated_cone(0).unwrap();
    let frame = probe_frame(&cone);
    let kappa = Wavenumber::new(scene.kappa).unwrap();
    let c_true = scene.cells[0].amplitude;

    let radii = [scene.r0 / 8.0, scene.r0 / 16.0, scene.r0 / 32.0];
    let mut sk = Vec::new();
    let mut moments = Vec::new();
    for &r in &radii {
        let y_r = frame.probe_point(r);
        sk.push(
            c_true * volume_moment(&scene.cells[0].polyhedron, kappa, &frame, y_r, &spec).unwrap(),
        );
        moments.push(
            corner_moment(
                &scene.cells[0].polyhedron,
                kappa,
                &frame,
                y_r,
                scene.r0,
                &spec,
            )
            .unwrap(),
        );
    }
    let two_term = estimate_amplitude(&sk, &moments, &radii, FitMode::TwoTerm, 1e-6).unwrap();
    // single-radius estimates approach the two-term value as r shrinks
    let mut prev = f64::INFINITY;
    for i in 0..radii.len() {
        let single = estimate_amplitude(
            &sk[i..=i],
            &moments[i..=i],
            &radii[i..=i],
            FitMode::SingleRadius,
            1e-6,
        )
        .unwrap();
        let gap = (single.estimate - two_term.estimate).norm();
        assert!(
            gap <= prev * 1.05,
            "single-radius gap not shrinking: {gap} after {prev}"
        );
        prev = gap;
    }
    // and the two-term fit itself lands on the truth
    assert!((two_term.estimate - c_true).norm() <= 0.05 * c_true.norm());
}

#[test]
fn recovery_error_grows_with_the_cell_count() {
    use corner_probe::forward::add_noise;
    use corner_probe::recon::stability_sweep;

    let full = load("three_cells.toml");
    let mut single = full.clone();
    single.cells = vec![full.cells[2].clone()];
    let spec = QuadratureSpec::new(1e-9);
    let grid = SphereGrid::new(full.radius, 16);
    let level = [3e-3];
    let seeds = [0u64, 1, 2];
    let mut means = Vec::new();
    for scene in [&single, &full] {
        let clean = simulate_boundary(scene, &grid, &spec).unwrap();
        let mut options = ReconOptions::new(scene.r0);
        options.quad = spec.clone();
        let table = stability_sweep(scene, &clean, &level, &seeds, &options).unwrap();
        let mean = table.rows.iter().map(|r| r.max_error).sum::<f64>() / table.rows.len() as f64;
        means.push(mean);
        let _ = add_noise(&clean, 0.0, 0).unwrap();
    }
    assert!(
        means[1] > means[0],
        "recovery error should grow with the cell count: {means:?}"
    );
}

#[test]
fn corner_moment_flips_sign_under_mirror_reflection() {
    use corner_probe::geometry::{ConvexPolyhedron, Point3, ProbeFrame};
    use corner_probe::kernels::Wavenumber;
    use corner_probe::recon::corner_moment;

    let kappa = Wavenumber::new(1.3).unwrap();
    let frame = ProbeFrame::identity();
    let spec = QuadratureSpec::new(1e-9);
    let r0 = 0.6f64;
    // mirror-symmetric pair of boxes about the probe plane z = 0
    let upper = ConvexPolyhedron::axis_aligned_box(
        Point3::new(-0.1f64, -0.1, 0.05),
        Point3::new(0.2, 0.15, 0.4),
    )
    .unwrap();
    let lower = ConvexPolyhedron::axis_aligned_box(
        Point3::new(-0.1f64, -0.1, -0.4),
        Point3::new(0.2, 0.15, -0.05),
    )
    .unwrap();
    let y = Point3::<f64>::zero();
    let mu = corner_moment(&upper, kappa, &frame, y, r0, &spec).unwrap();
    let ml = corner_moment(&lower, kappa, &frame, y, r0, &spec).unwrap();
    assert!(mu.abs() > 1e-3, "clipped moment should be nontrivial");
    assert!((mu + ml).abs() < 1e-4 * mu.abs(), "{mu} vs {ml}");
}
