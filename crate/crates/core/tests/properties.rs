use hfdyn::diagnostics::{besov_time_norm, extract_scattering_state, field_besov_norm};
use hfdyn::dynamics::{gaussian_bump, Backend};
use hfdyn::hypotheses::smallness_lhs;
use hfdyn::linear_response::{linear_group, ModeTrajectory, QuadraticTerm, ResponseKind};
use hfdyn::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Grid64> {
    (1usize..=3, 0usize..3, 4.0f64..20.0).prop_map(|(d, k, l)| {
        let n = [4, 8, 16][k].min(if d == 3 { 8 } else { 16 });
        Grid64::new(d, n, l).unwrap()
    })
}

fn field(grid: &Grid64, seed: &[f64]) -> SpectralField64 {
    let data = (0..grid.sites())
        .map(|i| {
            let a = seed[i % seed.len()];
            let b = seed[(i * 7 + 3) % seed.len()];
            Complex64::new(a * (1.0 + i as f64).sin(), b * (0.3 * i as f64).cos())
        })
        .collect();
    SpectralField64::new(grid, Representation::Position, data).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn offset(grid: &Grid64, raw: [isize; 4]) -> Offset {
    let mut o = [0isize; MAX_DIM];
    o[..grid.dim()].copy_from_slice(&raw[..grid.dim()]);
    o
}

fn translate(f: &SpectralField64, shift: &Offset) -> SpectralField64 {
    let g = f.grid();
    let mut neg = *shift;
    neg.iter_mut().for_each(|v| *v = -*v);
    let data = (0..g.sites()).map(|x| f.data()[g.shift(x, &neg)]).collect();
    SpectralField64::new(g, Representation::Position, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parseval_and_round_trip(grid in grid_strategy(), seed in prop::collection::vec(-2.0f64..2.0, 5..9)) {
        let f = field(&grid, &seed);
        let fh = forward_transform(&f).unwrap();
        prop_assert!(rel(f.norm_sq(), fh.norm_sq()) < 1e-12);
        let back = inverse_transform(&fh).unwrap();
        let err = back.data().iter().zip(f.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12 * f.max_abs().max(1.0));
    }

    #[test]
    fn transform_is_linear(
        grid in grid_strategy(),
        s1 in prop::collection::vec(-1.0f64..1.0, 5),
        s2 in prop::collection::vec(-1.0f64..1.0, 6),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let (f, g) = (field(&grid, &s1), field(&grid, &s2));
        let mut combo = f.clone();
        combo.scale(Complex64::new(a, 0.0));
        combo.axpy(Complex64::new(0.0, b), &g).unwrap();
        let lhs = forward_transform(&combo).unwrap();
        let (fh, gh) = (forward_transform(&f).unwrap(), forward_transform(&g).unwrap());
        let scale = fh.max_abs().max(gh.max_abs()).max(1.0);
        for i in 0..grid.sites() {
            let rhs = fh.data()[i] * a + gh.data()[i] * Complex64::new(0.0, b);
            prop_assert!((lhs.data()[i] - rhs).norm() < 1e-13 * scale * (a.abs() + b.abs() + 1.0));
        }
    }

    #[test]
    fn shells_partition_every_field(grid in grid_strategy(), seed in prop::collection::vec(-1.0f64..1.0, 5)) {
        let fh = forward_transform(&field(&grid, &seed)).unwrap();
        let shells = shell_decomposition(&fh);
        let mut owners = vec![0usize; grid.sites()];
        let mut sum = vec![Complex64::new(0.0, 0.0); grid.sites()];
        for (_, p) in &shells {
            for (i, v) in p.data().iter().enumerate() {
                if *v != Complex64::new(0.0, 0.0) {
                    owners[i] += 1;
                }
                sum[i] += v;
            }
        }
        prop_assert!(owners.iter().all(|&o| o <= 1));
        prop_assert_eq!(sum.as_slice(), fh.data());
    }

    #[test]
    fn translation_leaves_spatial_norms_unchanged(
        grid in grid_strategy(),
        seed in prop::collection::vec(-1.0f64..1.0, 5),
        raw in prop::array::uniform4(-20isize..20),
        s in 0.0f64..2.0,
    ) {
        let f = field(&grid, &seed);
        let t = translate(&f, &offset(&grid, raw));
        prop_assert!(rel(f.norm(), t.norm()) < 1e-13);
        let (a, b) = (field_besov_norm(&f, 2.0, -0.5, s).unwrap(), field_besov_norm(&t, 2.0, -0.5, s).unwrap());
        prop_assert!(rel(a, b) < 1e-12);
        for (p, k) in [(1.0, 0usize), (2.0, 2), (f64::INFINITY, 1)] {
            let e = hypotheses::Exponent::from_f64(p).unwrap();
            let (a, b) = (discrete_sobolev_norm(&f, k, e, 0).unwrap(), discrete_sobolev_norm(&t, k, e, 0).unwrap());
            prop_assert!(rel(a, b) < 1e-12, "p = {} k = {}: {} vs {}", p, k, a, b);
        }
    }

    #[test]
    fn besov_without_weights_is_l2(grid in grid_strategy(), seed in prop::collection::vec(-1.0f64..1.0, 5)) {
        let f = field(&grid, &seed);
        prop_assert!(rel(field_besov_norm(&f, 2.0, 0.0, 0.0).unwrap(), f.norm()) < 1e-12);
    }
}

fn gaussian_g(grid: &Grid64, density: f64, sigma: f64) -> MomentumDistribution64 {
    MomentumDistribution64::gaussian(grid, density, sigma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn delta_potential_leaves_free_dispersion(
        a in -5.0f64..5.0,
        density in 0.1f64..3.0,
        sigma in 0.3f64..1.5,
        d in 1usize..=2,
    ) {
        let grid = Grid64::new(d, 16, 12.0).unwrap();
        let g = gaussian_g(&grid, density, sigma);
        let th = dispersion_relation(&InteractionPotential64::point(&grid, a), &g).unwrap();
        for (i, v) in th.theta().iter().enumerate() {
            prop_assert!((v - grid.xi_sq(i)).abs() < 1e-12 * grid.xi_sq(i).max(1.0));
        }
    }

    #[test]
    fn free_ellipticity_is_exactly_two(density in 0.01f64..5.0, sigma in 0.2f64..2.0, d in 1usize..=3) {
        let grid = Grid64::new(d, 8, 10.0).unwrap();
        let th = dispersion_relation(&InteractionPotential64::zero(&grid), &gaussian_g(&grid, density, sigma)).unwrap();
        prop_assert_eq!(ellipticity_constant(&th), 2.0);
    }

    #[test]
    fn hessian_minimum_bounds_random_quadratic_forms(
        amp in -1.0f64..1.0,
        width in 0.5f64..2.0,
        density in 0.1f64..1.0,
        probes in prop::collection::vec((0usize..256, -1.0f64..1.0, -1.0f64..1.0), 200),
    ) {
        let grid = Grid64::new(2, 16, 12.0).unwrap();
        let w = InteractionPotential64::gaussian(&grid, amp, width).unwrap();
        let th = dispersion_relation(&w, &gaussian_g(&grid, density, 0.8)).unwrap();
        let lam = th.lambda_star();
        for (site, e0, e1) in probes {
            let n2 = e0 * e0 + e1 * e1;
            prop_assume!(n2 > 1e-6);
            let h = th.hessian_at(site);
            let q = (h[0] * e0 * e0 + 2.0 * h[1] * e0 * e1 + h[3] * e1 * e1) / n2;
            prop_assert!(q >= lam - 1e-8, "site {}: {} < {}", site, q, lam);
        }
    }

    #[test]
    fn smallness_lhs_is_homogeneous(
        s in prop_oneof![-4.0f64..-0.1, 0.1f64..4.0],
        amp in 0.1f64..1.0,
        y in 1isize..4,
    ) {
        let grid = Grid64::new(1, 32, 16.0).unwrap();
        let w = InteractionPotential64::symmetric_pair(&grid, [y as f64 * 0.5, 0.0, 0.0, 0.0], amp).unwrap();
        let g = gaussian_g(&grid, 0.7, 0.9);
        let base = smallness_lhs(&w, &g).unwrap();
        prop_assert!(rel(smallness_lhs(&w.scaled(s), &g).unwrap(), s.abs() * base) < 1e-13);
        prop_assume!(s > 0.0);
        prop_assert!(rel(smallness_lhs(&w, &g.scaled(s)).unwrap(), s * base) < 1e-13);
    }
}

fn perturbed_run(
    w: &InteractionPotential64,
    g: &MomentumDistribution64,
    eps: f64,
    kick: f64,
    steps: usize,
) -> Trajectory<f64> {
    let grid = g.grid();
    let s0 = FieldState64::perturbed(g, &gaussian_bump(grid, [0.3; 4], 0.9, [kick; 4]), eps).unwrap();
    let opts = EvolveOptions {
        duration: 0.05 * steps as f64,
        dt: 0.05,
        observer_stride: 1,
        checkpoint_stride: Some(1),
    };
    evolve(&HartreeFock64::new(w), &s0, &opts, &mut []).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_conserves_mass_and_commutes_with_translation(
        a in -0.5f64..0.5,
        eps in 0.01f64..0.2,
        kick in -1.0f64..1.0,
        shift in -8isize..8,
    ) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let w = InteractionPotential64::symmetric_pair(&grid, [1.0, 0.0, 0.0, 0.0], a).unwrap();
        let traj = perturbed_run(&w, &g, eps, kick, 10);
        let m0 = traj.checkpoints[0].total_mass();
        for s in &traj.checkpoints {
            prop_assert!(rel(s.total_mass(), m0) < 1e-10 * s.time().max(1.0));
        }
        let z: Offset = [shift, 0, 0, 0];
        let opts = EvolveOptions { duration: 0.5, dt: 0.05, observer_stride: 10, checkpoint_stride: None };
        let moved = evolve(&HartreeFock64::new(&w), &traj.checkpoints[0].translated(&z), &opts, &mut []).unwrap();
        let expect = traj.final_state.translated(&z);
        for (u, v) in moved.final_state.fields().iter().zip(expect.fields()) {
            let err = u.data().iter().zip(v.data()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12, "{}", err);
        }
    }

    #[test]
    fn orbital_kernel_is_hermitian(a in -0.5f64..0.5, eps in 0.01f64..0.3, kick in -1.0f64..1.0) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let w = InteractionPotential64::symmetric_pair(&grid, [1.0, 0.0, 0.0, 0.0], a).unwrap();
        let traj = perturbed_run(&w, &g, eps, kick, 4);
        let seps = hfdyn::dynamics::default_separations(&w);
        let reference = equilibrium_correlation(&g);
        for s in &traj.checkpoints {
            prop_assert!(correlation_kernel(s, &reference, &seps).unwrap().hermitian_defect().unwrap() < 1e-15);
        }
    }

    #[test]
    fn free_scattering_state_does_not_depend_on_extraction_time(eps in 0.01f64..0.5, kick in -1.0f64..1.0, k in 1usize..8) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let w = InteractionPotential64::zero(&grid);
        let th = dispersion_relation(&w, &g).unwrap();
        let traj = perturbed_run(&w, &g, eps, kick, 8);
        let early = extract_scattering_state(&traj.checkpoints, &th, 0.05 * k as f64).unwrap();
        let late = extract_scattering_state(&traj.checkpoints, &th, 0.4).unwrap();
        for (u, v) in early.z_infinity.iter().zip(&late.z_infinity) {
            let err = u.data().iter().zip(v.data()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12);
        }
    }

    #[test]
    fn run_norms_are_translation_invariant(eps in 0.01f64..0.3, kick in -1.0f64..1.0, shift in -8isize..8) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let w = InteractionPotential64::symmetric_pair(&grid, [1.0, 0.0, 0.0, 0.0], 0.3).unwrap();
        let traj = perturbed_run(&w, &g, eps, kick, 6);
        let z: Offset = [shift, 0, 0, 0];
        let moved: Vec<_> = traj.checkpoints.iter().map(|s| s.translated(&z)).collect();
        for (p, q, s) in [(2.0, 2.0, 1.0), (4.0, 6.0, 0.0), (f64::INFINITY, 2.0, 0.0)] {
            let (a, b) = (mixed_norm(&traj.checkpoints, p, q, s).unwrap(), mixed_norm(&moved, p, q, s).unwrap());
            prop_assert!(rel(a.value, b.value) < 1e-12);
        }
        let (a, b) = (
            besov_time_norm(&traj.checkpoints, 4.0, 2.0, -0.5, 0.25).unwrap(),
            besov_time_norm(&moved, 4.0, 2.0, -0.5, 0.25).unwrap(),
        );
        prop_assert!(rel(a.value, b.value) < 1e-12);
    }

    #[test]
    fn equilibrium_energy_norm_is_constant_mass(density in 0.1f64..2.0, sigma in 0.4f64..1.2) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let g = gaussian_g(&grid, density, sigma);
        let w = InteractionPotential64::gaussian(&grid, 0.4, 1.0).unwrap();
        let traj = perturbed_run(&w, &g, 0.0, 0.0, 6);
        let n = mixed_norm(&traj.checkpoints, f64::INFINITY, 2.0, 0.0).unwrap();
        prop_assert!(rel(n.value, traj.checkpoints[0].total_mass().sqrt()) < 1e-10);
        prop_assert!(n.per_time.iter().all(|v| rel(*v, n.value) < 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn modulated_group_is_galilei_propagator(
        seed in prop::collection::vec(-1.0f64..1.0, 5),
        mode in 0usize..16,
        t in -2.0f64..2.0,
        amp in -0.5f64..0.5,
    ) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let w = InteractionPotential64::symmetric_pair(&grid, [1.0, 0.0, 0.0, 0.0], amp).unwrap();
        let th = dispersion_relation(&w, &gaussian_g(&grid, 0.5, 0.8)).unwrap();
        let u = field(&grid, &seed);
        let e = hfdyn::dynamics::plane_wave(&grid, mode);
        let modulate = |f: &SpectralField64| {
            let data = f.data().iter().zip(e.data()).map(|(a, b)| a * b).collect();
            SpectralField64::new(&grid, Representation::Position, data).unwrap()
        };
        let mut lhs = linear_group(&th, &modulate(&u), t).unwrap();
        let p = th.theta()[mode] * t;
        lhs.scale(Complex64::new(p.cos(), p.sin()));
        let rhs = modulate(&GalileiPropagator::new(&th, mode).apply(&linear_group(&th, &u, t).unwrap(), t).unwrap());
        let err = lhs.data().iter().zip(rhs.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{}", err);
    }

    #[test]
    fn response_preserves_hermitian_structure(amp in -1.0f64..1.0, seed in any::<u64>(), y in 1isize..4) {
        let grid = Grid64::new(1, 16, 8.0).unwrap();
        let w = InteractionPotential64::symmetric_pair(&grid, [0.5 * y as f64, 0.0, 0.0, 0.0], amp).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let th = dispersion_relation(&w, &g).unwrap();
        let model = ResponseModel64::new(&w, &g, &th).unwrap();
        let v = VTrajectory64::random_hermitian(&grid, 0.1, 6, model.required_separations(), 1.0, seed).unwrap();
        for kind in [ResponseKind::L3, ResponseKind::L4] {
            let out = model.apply_response(&v, kind).unwrap();
            prop_assert!(out.fourier_hermitian_defect().unwrap() < 1e-9);
        }
    }

    #[test]
    fn quadratic_terms_are_bilinear(a in -3.0f64..3.0, b in -3.0f64..3.0, eps in 0.05f64..0.3) {
        let grid = Grid64::new(1, 8, 6.0).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let w = InteractionPotential64::symmetric_pair(&grid, [0.75, 0.0, 0.0, 0.0], 0.4).unwrap();
        let th = dispersion_relation(&w, &g).unwrap();
        let traj = perturbed_run(&w, &g, eps, 0.5, 4);
        let model = ResponseModel64::new(&w, &g, &th).unwrap();
        let z = ModeTrajectory::perturbations(&traj.checkpoints, &th).unwrap();
        let v = VTrajectory64::random_hermitian(&grid, 0.05, 4, model.required_separations(), 0.3, 5).unwrap();
        for k in 1..=4 {
            let base = model.apply_q(k, &z, &v).unwrap();
            let scaled = model.apply_q(k, &z.scaled(a), &v.scaled(b)).unwrap();
            let (err, size) = match (base, scaled) {
                (QuadraticTerm::Field(p), QuadraticTerm::Field(q)) => {
                    let mut d = q.clone();
                    d.axpy(-a * b, &p).unwrap();
                    (d.sup_norm(), p.sup_norm())
                }
                (QuadraticTerm::Kernel(p), QuadraticTerm::Kernel(q)) => {
                    let mut d = q.clone();
                    d.axpy(-a * b, &p).unwrap();
                    (d.sup_norm(), p.sup_norm())
                }
                _ => unreachable!(),
            };
            prop_assert!(err <= 1e-12 * size.max(1e-300) * (a * b).abs().max(1.0), "Q{}: {} vs {}", k, err, size);
        }
    }

    #[test]
    fn monte_carlo_states_keep_their_seed(seed in any::<u64>(), m in 1usize..16) {
        let grid = Grid64::new(1, 8, 6.0).unwrap();
        let g = gaussian_g(&grid, 0.5, 0.8);
        let mc = FieldState64::monte_carlo(&FieldState64::equilibrium(&g), m, seed).unwrap();
        prop_assert_eq!(mc.backend(), Backend::MonteCarlo { seed });
        prop_assert_eq!(mc.len(), m);
    }
}
