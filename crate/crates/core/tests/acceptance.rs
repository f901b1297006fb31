//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the report is always printed; exits non-zero on any FAIL.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use hfdyn::dynamics::{default_separations, gaussian_bump, plane_wave, Backend, KernelObserver, MassObserver};
use hfdyn::linear_response::ModeTrajectory;
use hfdyn::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

/// Mass drift per unit time of every run made by the suite.
#[derive(Default)]
struct MassLedger {
    runs: Vec<(String, f64)>,
}

fn x1(v: f64) -> Coord<f64> {
    [v, 0.0, 0.0, 0.0]
}

fn position(f: &SpectralField64) -> SpectralField64 {
    match f.representation() {
        Representation::Position => f.clone(),
        Representation::Frequency => inverse_transform(f).unwrap(),
    }
}

fn run(
    w: &InteractionPotential64,
    s0: &FieldState64,
    dt: f64,
    duration: f64,
    stride: usize,
    ledger: &mut MassLedger,
    label: &str,
) -> Trajectory<f64> {
    let opts = EvolveOptions {
        duration,
        dt,
        observer_stride: stride,
        checkpoint_stride: Some(stride),
    };
    let mut mass = MassObserver::default();
    let mut obs: [&mut dyn Observer<f64>; 1] = [&mut mass];
    let traj = evolve(&HartreeFock64::new(w), s0, &opts, &mut obs).unwrap();
    let drift = traj
        .records
        .iter()
        .filter(|r| r.observable == "mass_drift")
        .fold(0.0f64, |a, r| a.max(r.value));
    ledger.runs.push((label.to_string(), drift / duration));
    traj
}

fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn diff_sup(a: &ModeTrajectory<f64>, b: &ModeTrajectory<f64>) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b).unwrap();
    d.sup_norm()
}

/// Sup distance between a run on `N_t` steps and one on `2N_t` at shared times.
fn coarse_fine(a: &ModeTrajectory<f64>, b: &ModeTrajectory<f64>) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..a.modes().len() {
        for n in 0..=a.steps() {
            for (p, q) in a.field(k, n).iter().zip(b.field(k, 2 * n)) {
                worst = worst.max((p - q).norm());
            }
        }
    }
    worst
}

fn free_oracle(ledger: &mut MassLedger) -> Outcome {
    let grid = Grid64::new(1, 256, 40.0).unwrap();
    let (c, s, kappa) = (20.0, 1.0, 2.0 * PI * 6.0 / 40.0);
    let u0 = gaussian_bump(&grid, x1(c), s, x1(kappa));
    let s0 = FieldState64::new(&grid, 0.0, vec![u0], vec![1.0], vec![], Backend::Orbital).unwrap();
    let w = InteractionPotential64::zero(&grid);
    let start = Instant::now();
    let traj = run(&w, &s0, 1e-3, 1.0, 100, ledger, "free oracle");
    let elapsed = start.elapsed().as_secs_f64();
    let t = traj.final_state.time();
    let u = position(&traj.final_state.fields()[0]);

    // i∂ₜu = -∂ₓ²u: the Gaussian spreads with complex variance s² + 2it and
    // its centre moves at 2κ.
    let var = Complex64::new(s * s, 2.0 * t);
    let pref = (Complex64::new(s * s, 0.0) / var).sqrt();
    let len = grid.length();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in u.data().iter().enumerate() {
        let x = grid.position(i)[0];
        let y = (x - c - 2.0 * kappa * t + 1.5 * len).rem_euclid(len) - 0.5 * len;
        let exact = Complex64::from_polar(1.0, kappa * x - kappa * kappa * t) * pref * (-(y * y) / (2.0 * var)).exp();
        num += (v - exact).norm_sqr();
        den += exact.norm_sqr();
    }
    let err = (num / den).sqrt();
    Outcome {
        pass: err < 1e-6 && elapsed < 5.0,
        detail: format!("relative l2 error {err:.2e} (< 1e-6), runtime {elapsed:.2} s (< 5 s)"),
    }
}

fn random_modes(
    grid: &Grid64,
    m: &ResponseModel64,
    g: &MomentumDistribution64,
    dt: f64,
    steps: usize,
    seed: u64,
) -> ModeTrajectory<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let occ = g.occupations();
    let values = m
        .modes()
        .iter()
        .map(|_| {
            (0..=steps)
                .map(|_| {
                    (0..grid.sites())
                        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                        .collect()
                })
                .collect()
        })
        .collect();
    let weights = m.modes().iter().map(|&k| occ[k]).collect();
    ModeTrajectory::new(grid, dt, m.modes().to_vec(), weights, values).unwrap()
}

fn delta_cancellation() -> Outcome {
    let grid = Grid64::new(1, 32, 16.0).unwrap();
    let g = MomentumDistribution64::gaussian(&grid, 0.5, 0.8).unwrap();
    let (dt, steps) = (0.05, 20);
    // theta, L1+L2, L3+L4, Q1+Q2 residuals and the size of a single term.
    let mut worst = [0.0f64; 4];
    let mut single = f64::INFINITY;
    for (i, a) in [-1.0, 0.5, 3.0].into_iter().enumerate() {
        let w = InteractionPotential64::point(&grid, a);
        let th = dispersion_relation(&w, &g).unwrap();
        let theta_err = (0..grid.sites())
            .map(|k| (th.theta()[k] - grid.xi_sq(k)).abs())
            .fold(0.0, f64::max);
        let m = ResponseModel64::new(&w, &g, &th).unwrap();
        let v =
            VTrajectory64::random_hermitian(&grid, dt, steps, m.required_separations(), 1.0, 11 + i as u64).unwrap();
        let z = random_modes(&grid, &m, &g, dt, steps, 21 + i as u64);

        let mut l12 = 0.0f64;
        for path in [DuhamelPath::Direct, DuhamelPath::Formula] {
            let l2 = m.apply_l2(&v, path).unwrap();
            let mut sum = m.apply_l1(&v, path).unwrap();
            sum.axpy(1.0, &l2).unwrap();
            l12 = l12.max(sum.sup_norm());
            single = single.min(l2.sup_norm());
        }
        let l4 = m.apply_l4(&v).unwrap();
        let mut l34 = m.apply_l3(&v).unwrap();
        l34.axpy(1.0, &l4).unwrap();
        let q2 = m.apply_q2(&z, &v).unwrap();
        let mut q12 = m.apply_q1(&z, &v).unwrap();
        q12.axpy(1.0, &q2).unwrap();
        single = single.min(l4.sup_norm()).min(q2.sup_norm());

        for (slot, val) in worst.iter_mut().zip([theta_err, l12, l34.sup_norm(), q12.sup_norm()]) {
            *slot = slot.max(val);
        }
    }
    Outcome {
        pass: worst[0] <= 1e-12 && worst[1..].iter().all(|&r| r <= 1e-10) && single > 1e-3,
        detail: format!(
            "|theta - |xi|^2| {:.1e}, L1+L2 {:.1e}, L3+L4 {:.1e}, Q1+Q2 {:.1e} (single terms >= {single:.2})",
            worst[0], worst[1], worst[2], worst[3]
        ),
    }
}

fn equilibrium_stationarity(ledger: &mut MassLedger) -> Outcome {
    let grid = Grid64::new(1, 32, 10.0).unwrap();
    let w = InteractionPotential64::gaussian(&grid, 0.3, 1.0).unwrap();
    let g = MomentumDistribution64::fermi_dirac(&grid, 1.0, 1.0, 0.5).unwrap();
    let th = dispersion_relation(&w, &g).unwrap();
    let s0 = FieldState64::equilibrium(&g);
    let traj = run(&w, &s0, 0.01, 1.0, 10, ledger, "equilibrium");

    // Mean field on plane waves, summed directly over the lattice terms:
    // θ(ξ) = |ξ|² + Σ_z c_z Σ_j n_j (1 - cos((ξ_j - ξ)·z)).
    let terms: Vec<(f64, f64)> = w
        .lattice()
        .terms()
        .iter()
        .map(|(z, c)| (w.lattice().location(z)[0], *c))
        .collect();
    let occupied: Vec<(f64, f64)> = s0
        .modes()
        .iter()
        .zip(s0.weights())
        .map(|(&k, &n)| (grid.wavevector(k)[0], n))
        .collect();
    let theta_d = |site: usize| {
        let xi = grid.wavevector(site)[0];
        let mut v = xi * xi;
        for &(z, c) in &terms {
            for &(xj, n) in &occupied {
                v += c * n * (1.0 - ((xj - xi) * z).cos());
            }
        }
        v
    };
    let theta_gap = s0
        .modes()
        .iter()
        .map(|&k| (theta_d(k) - th.theta()[k]).abs())
        .fold(0.0, f64::max);

    let (mut amp, mut phase) = (0.0f64, 0.0f64);
    for state in &traj.checkpoints {
        let t = state.time();
        for (u, &site) in state.fields().iter().zip(state.modes()) {
            let u = position(u);
            let e = plane_wave(&grid, site);
            let a: Complex64 = e
                .data()
                .iter()
                .zip(u.data())
                .map(|(p, q)| p.conj() * q)
                .sum::<Complex64>()
                / grid.sites() as f64;
            amp = amp.max((a.norm() - 1.0).abs());
            phase = phase.max((a * Complex64::from_polar(1.0, theta_d(site) * t)).arg().abs());
        }
    }
    Outcome {
        pass: amp < 1e-10 && phase < 1e-8,
        detail: format!(
            "amplitude drift {amp:.1e} (< 1e-10), phase error {phase:.1e} (< 1e-8), solver vs direct theta {theta_gap:.1e}"
        ),
    }
}

fn correlation_law() -> Outcome {
    let grid = Grid64::new(1, 64, 16.0).unwrap();
    let (rho, sigma) = (1.0, 1.0);
    let g = MomentumDistribution64::gaussian(&grid, rho, sigma).unwrap();
    // (2π)^{d/2} ĝ(z) for the normalised Gaussian g.
    let exact: Vec<f64> = (0..grid.sites())
        .map(|i| rho * (-(sigma * grid.centered_position(i)[0]).powi(2) / 2.0).exp())
        .collect();
    let counts = [64usize, 256, 1024, 4096];
    let seeds = 16u64;
    let start = Instant::now();
    let errors: Vec<f64> = counts
        .iter()
        .map(|&m| {
            let mut acc = 0.0;
            for seed in 0..seeds {
                let k = sample_equilibrium(&g, m, seed).unwrap().empirical_correlation(m);
                acc += k.iter().zip(&exact).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / grid.sites() as f64;
            }
            (acc / seeds as f64).sqrt()
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let lx: Vec<f64> = counts.iter().map(|&m| (m as f64).ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let slope = fit_slope(&lx, &ly);
    Outcome {
        pass: (slope + 0.5).abs() <= 0.1 && elapsed < 60.0,
        detail: format!(
            "error slope {slope:.3} (-0.5 +- 0.1), rms errors {:?}, runtime {elapsed:.1} s (< 60 s)",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()
        ),
    }
}

fn dispersive_decay() -> Outcome {
    let mut pass = true;
    let mut detail = String::new();
    for d in [1usize, 2] {
        let grid = Grid64::new(d, if d == 1 { 2048 } else { 512 }, 200.0).unwrap();
        let w = InteractionPotential64::gaussian(&grid, 0.3, 1.0).unwrap();
        let g = MomentumDistribution64::gaussian(&grid, 0.5, 1.0).unwrap();
        let elliptic = dispersion_relation(&w, &g).unwrap();
        let expected = -(d as f64) / 2.0;
        for (name, th) in [("free", DispersionRelation64::free(&grid)), ("elliptic", elliptic)] {
            match dispersive_decay_fit(&th, 1, (1.0, 10.0), 24) {
                Ok(fit) => {
                    let ok = (fit.exponent - expected).abs() <= 0.1 * expected.abs() && th.lambda_star() > 0.0;
                    pass &= ok;
                    let _ = write!(detail, "d={d} {name} {:.3}; ", fit.exponent);
                }
                Err(e) => {
                    pass = false;
                    let _ = write!(detail, "d={d} {name} error {e}; ");
                }
            }
        }
    }
    let small = Grid64::new(1, 256, 40.0).unwrap();
    let wrapped = matches!(
        dispersive_decay_fit(&DispersionRelation64::free(&small), 1, (1.0, 10.0), 24),
        Err(Error::WrapWindow { .. })
    );
    pass &= wrapped;
    let _ = write!(detail, "window past wrap time refused: {wrapped}");
    Outcome { pass, detail }
}

fn smooth_v(grid: &Grid64, seps: &[Offset], t_end: f64, steps: usize, omega: f64, seed: u64) -> VTrajectory64 {
    let basis = VTrajectory64::random_hermitian(grid, 1.0, 1, seps.to_vec(), 1.0, seed).unwrap();
    let (a, b) = (&basis.values()[0], &basis.values()[1]);
    let dt = t_end / steps as f64;
    let values = (0..=steps)
        .map(|n| {
            let (c, s) = ((omega * n as f64 * dt).cos(), (omega * n as f64 * dt).sin());
            a.iter()
                .zip(b)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| p * c + q * s).collect())
                .collect()
        })
        .collect();
    VTrajectory64::new(grid, dt, seps.to_vec(), values).unwrap()
}

fn representation_formula() -> Outcome {
    let grid = Grid64::new(1, 32, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_rel, mut worst_ratio) = (0.0f64, f64::INFINITY);
    for i in 0..20u64 {
        let y = rng.random_range(1..=4) as f64 * grid.dx();
        let w = InteractionPotential64::symmetric_pair(&grid, x1(y), rng.random_range(-1.0..1.0)).unwrap();
        let g =
            MomentumDistribution64::gaussian(&grid, rng.random_range(0.3..1.5), rng.random_range(0.5..1.2)).unwrap();
        let th = dispersion_relation(&w, &g).unwrap();
        let m = ResponseModel64::new(&w, &g, &th).unwrap();
        let seps = m.required_separations();

        let v = VTrajectory64::random_hermitian(&grid, 1.0 / 64.0, 64, seps.clone(), 1.0, 100 + i).unwrap();
        for (direct, formula) in [
            (
                m.apply_l1(&v, DuhamelPath::Direct).unwrap(),
                m.apply_l1(&v, DuhamelPath::Formula).unwrap(),
            ),
            (
                m.apply_l2(&v, DuhamelPath::Direct).unwrap(),
                m.apply_l2(&v, DuhamelPath::Formula).unwrap(),
            ),
        ] {
            worst_rel = worst_rel.max(diff_sup(&direct, &formula) / direct.sup_norm());
        }

        // Quadrature defect on a V smooth in time, against the doubled grid.
        let omega = rng.random_range(0.5..2.0);
        let sols: Vec<_> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let v = smooth_v(&grid, &seps, 1.0, n, omega, 200 + i);
                [
                    m.apply_l1(&v, DuhamelPath::Formula).unwrap(),
                    m.apply_l2(&v, DuhamelPath::Formula).unwrap(),
                ]
            })
            .collect();
        for (a, (b, c)) in sols[0].iter().zip(sols[1].iter().zip(&sols[2])) {
            let d64 = coarse_fine(a, b);
            let d128 = coarse_fine(b, c);
            worst_ratio = worst_ratio.min(d64 / d128);
        }
    }
    Outcome {
        pass: worst_rel < 1e-6 && worst_ratio >= 2.0,
        detail: format!(
            "worst relative gap formula vs direct {worst_rel:.1e} (< 1e-6) over 20 instances, worst defect ratio N_t 64->128 {worst_ratio:.2} (>= 2)"
        ),
    }
}

fn response_norm(
    w: &InteractionPotential64,
    g: &MomentumDistribution64,
    dt: f64,
    steps: usize,
) -> (ResponseModel64, f64) {
    let th = dispersion_relation(w, g).unwrap();
    let m = ResponseModel64::new(w, g, &th).unwrap();
    let norm = m
        .response_operator_norm(ResponseKind::Sum, dt, steps, &m.required_separations())
        .unwrap()
        .norm;
    (m, norm)
}

fn neumann_inversion() -> Outcome {
    let grid = Grid64::new(1, 64, 16.0).unwrap();
    let (dt, steps) = (0.1, 16);
    let configs = [
        (
            InteractionPotential64::symmetric_pair(&grid, x1(1.0), 0.5).unwrap(),
            MomentumDistribution64::fermi_dirac(&grid, 1.0, 1.0, 0.5).unwrap(),
        ),
        (
            InteractionPotential64::symmetric_pair(&grid, x1(0.5), -0.7).unwrap(),
            MomentumDistribution64::gaussian(&grid, 0.8, 0.8).unwrap(),
        ),
        (
            InteractionPotential64::new(&grid, vec![(x1(0.0), 0.4), (x1(0.75), -0.2), (x1(-0.75), -0.2)], None)
                .unwrap(),
            MomentumDistribution64::fermi_dirac(&grid, 1.0, 2.0, 1.0).unwrap(),
        ),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (i, (w, g)) in configs.iter().enumerate() {
        let (_, base) = response_norm(w, g, dt, steps);
        let mut s = 0.45 / base;
        let (mut m, mut norm) = response_norm(&w.scaled(s), g, dt, steps);
        if norm > 0.5 {
            s *= 0.45 / norm;
            (m, norm) = response_norm(&w.scaled(s), g, dt, steps);
        }
        let rhs =
            VTrajectory64::random_hermitian(&grid, dt, steps, m.required_separations(), 1.0, 40 + i as u64).unwrap();
        match m.invert_response(&rhs) {
            Ok(sol) => {
                let mut r = sol.solution.clone();
                r.axpy(-1.0, &m.apply_response(&sol.solution, ResponseKind::Sum).unwrap())
                    .unwrap();
                r.axpy(-1.0, &rhs).unwrap();
                let residual = r.norm() / rhs.norm();
                let ok = norm <= 0.5 && sol.terms <= 30 && residual < 1e-8;
                pass &= ok;
                let _ = write!(detail, "norm {norm:.3}: {} terms, residual {residual:.1e}; ", sol.terms);
            }
            Err(e) => {
                pass = false;
                let _ = write!(detail, "norm {norm:.3}: {e}; ");
            }
        }
        let (big, big_norm) = response_norm(&w.scaled(1.5 / base), g, dt, steps);
        let rhs = VTrajectory64::random_hermitian(&grid, dt, steps, big.required_separations(), 1.0, 50).unwrap();
        let refused =
            big_norm >= 1.0 && matches!(big.invert_response(&rhs), Err(Error::InvertibilityNotCertified { .. }));
        pass &= refused;
        if !refused {
            let _ = write!(detail, "norm {big_norm:.3} not refused; ");
        }
    }
    let _ = write!(detail, "norm >= 1 refused");
    Outcome { pass, detail }
}

fn fixed_point(ledger: &mut MassLedger) -> Outcome {
    let grid = Grid64::new(1, 32, 16.0).unwrap();
    let g = MomentumDistribution64::gaussian(&grid, 0.5, 0.8).unwrap();
    let w = InteractionPotential64::symmetric_pair(&grid, x1(1.0), 0.5).unwrap();
    let th = dispersion_relation(&w, &g).unwrap();
    let profile = gaussian_bump(&grid, x1(8.0), 1.0, x1(2.0 * PI * 2.0 / 16.0));
    let t_end = 2.0;
    let mut residual = |eps: f64, steps: usize| {
        let s0 = FieldState64::perturbed(&g, &profile, eps).unwrap();
        let traj = run(&w, &s0, t_end / steps as f64, t_end, 1, ledger, "fixed point");
        fixed_point_residual(&w, &g, &th, &traj.checkpoints).unwrap()
    };
    let totals: Vec<f64> = [32usize, 64, 128].iter().map(|&n| residual(1e-3, n).total()).collect();
    let ratios: Vec<f64> = totals.windows(2).map(|p| p[0] / p[1]).collect();
    let eps = [1e-4, 1e-3, 1e-2];
    let quad: Vec<f64> = eps.iter().map(|&e| residual(e, 64).quadratic()).collect();
    let slope = fit_slope(&eps.map(f64::ln), &quad.iter().map(|q| q.ln()).collect::<Vec<_>>());
    Outcome {
        pass: totals[0] < 1e-4 && ratios.iter().all(|&r| r >= 2.0) && (slope - 2.0).abs() <= 0.1,
        detail: format!(
            "defect {:.2e} at N_t=32 (< 1e-4), refinement ratios {:.2?} (>= 2), Q slope {slope:.3} (2 +- 0.1)",
            totals[0], ratios
        ),
    }
}

fn fingerprint(traj: &Trajectory<f64>) -> Vec<u8> {
    let mut text = String::new();
    for r in &traj.records {
        let _ = writeln!(text, "{:?},{},{:?}", r.time, r.observable, r.value);
    }
    let mut bytes = text.into_bytes();
    for f in traj.final_state.fields() {
        for v in f.data() {
            bytes.extend(v.re.to_le_bytes());
            bytes.extend(v.im.to_le_bytes());
        }
    }
    bytes
}

fn conservation_and_determinism(ledger: &mut MassLedger) -> Outcome {
    let grid = Grid64::new(1, 64, 16.0).unwrap();
    let w = InteractionPotential64::symmetric_pair(&grid, x1(1.0), 0.5).unwrap();
    let g = MomentumDistribution64::fermi_dirac(&grid, 1.0, 1.0, 0.5).unwrap();
    let profile = gaussian_bump(&grid, x1(8.0), 1.0, x1(2.0 * PI * 3.0 / 16.0));
    let orbital = FieldState64::perturbed(&g, &profile, 1e-2).unwrap();
    let mc = FieldState64::monte_carlo(&orbital, 64, 7).unwrap();
    let reference = equilibrium_correlation(&g);
    let separations = default_separations(&w);
    let (duration, dt) = (1.0, 0.01);

    let mut identical = true;
    for initial in [&orbital, &mc] {
        let prints: Vec<Vec<u8>> = [1usize, 2, 8]
            .iter()
            .map(|&threads| {
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                let traj = pool.install(|| {
                    let opts = EvolveOptions {
                        duration,
                        dt,
                        observer_stride: 10,
                        checkpoint_stride: None,
                    };
                    let mut mass = MassObserver::default();
                    let mut kernel = KernelObserver {
                        reference: &reference,
                        separations: &separations,
                    };
                    let mut obs: [&mut dyn Observer<f64>; 2] = [&mut mass, &mut kernel];
                    evolve(&HartreeFock64::new(&w), initial, &opts, &mut obs).unwrap()
                });
                let drift = traj
                    .records
                    .iter()
                    .filter(|r| r.observable == "mass_drift")
                    .fold(0.0f64, |a, r| a.max(r.value));
                ledger.runs.push((
                    format!("{:?} on {threads} threads", initial.backend()),
                    drift / duration,
                ));
                fingerprint(&traj)
            })
            .collect();
        identical &= prints.windows(2).all(|p| p[0] == p[1]);
    }
    let (worst_name, worst) = ledger.runs.iter().fold(
        ("", 0.0f64),
        |acc, (n, r)| if *r > acc.1 { (n.as_str(), *r) } else { acc },
    );
    Outcome {
        pass: worst < 1e-10 && identical,
        detail: format!(
            "worst mass drift per unit time {worst:.1e} over {} runs ({worst_name}; < 1e-10), byte-identical across 1/2/8 threads: {identical}",
            ledger.runs.len()
        ),
    }
}

fn verdict(w: &InteractionPotential64, g: &MomentumDistribution64, mode: ThresholdMode) -> (Verdict, f64) {
    let th = dispersion_relation(w, g).unwrap();
    let verdict = match smallness_report(w, g, &th, mode) {
        Ok(c) => c.verdict,
        Err(Error::HypothesisViolation(_)) => Verdict::Fail,
        Err(e) => panic!("{e}"),
    };
    (verdict, th.lambda_star())
}

fn fermi_dirac_sweep() -> Outcome {
    let grid = Grid64::new(1, 64, 16.0).unwrap();
    let w = InteractionPotential64::symmetric_pair(&grid, x1(1.0), 0.5).unwrap();
    let mode = ThresholdMode::OperatorNorm { dt: 0.1, steps: 16 };
    let temps = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0];
    let sweep: Vec<Verdict> = temps
        .iter()
        .map(|&t| {
            verdict(
                &w,
                &MomentumDistribution64::fermi_dirac(&grid, 1.0, t, 0.5 * t).unwrap(),
                mode,
            )
            .0
        })
        .collect();
    let first_pass = sweep.iter().position(|v| *v == Verdict::Pass);
    let flips = match first_pass {
        Some(k) => {
            k > 0 && sweep[..k].iter().all(|v| *v == Verdict::Fail) && sweep[k..].iter().all(|v| *v == Verdict::Pass)
        }
        None => false,
    };
    let dense: Vec<(Verdict, f64)> = [0.25, 0.5, 1.0]
        .iter()
        .map(|&t| {
            verdict(
                &w,
                &MomentumDistribution64::fermi_dirac(&grid, 4.0, t, 0.5 * t).unwrap(),
                mode,
            )
        })
        .collect();
    let dense_fails = dense.iter().all(|(v, l)| *v == Verdict::Fail && *l <= 0.0);
    Outcome {
        pass: flips && dense_fails,
        detail: format!(
            "T {temps:?} -> {:?}; density 4: lambda* {:?}, all fail: {dense_fails}",
            sweep.iter().map(|v| v.as_str()).collect::<Vec<_>>(),
            dense.iter().map(|(_, l)| format!("{l:.3}")).collect::<Vec<_>>()
        ),
    }
}

fn main() {
    let mut ledger = MassLedger::default();
    let mut failed = 0;
    let mut clock = Instant::now();
    let mut report = |n: usize, name: &str, o: Outcome| {
        let secs = clock.elapsed().as_secs_f64();
        println!(
            "{} {n:>2} {name}: {} [{secs:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
        clock = Instant::now();
    };
    report(1, "free oracle", free_oracle(&mut ledger));
    report(2, "delta cancellation", delta_cancellation());
    report(3, "equilibrium stationarity", equilibrium_stationarity(&mut ledger));
    report(4, "correlation law", correlation_law());
    report(5, "dispersive decay", dispersive_decay());
    report(6, "representation formula", representation_formula());
    report(7, "neumann inversion", neumann_inversion());
    report(8, "fixed-point defect", fixed_point(&mut ledger));
    report(
        9,
        "conservation and determinism",
        conservation_and_determinism(&mut ledger),
    );
    report(10, "fermi-dirac sweep", fermi_dirac_sweep());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
