use hfdyn::diagnostics::{perturbation_states, z_norms, ZNorms};
use hfdyn::dynamics::{
    default_separations, evolve_partial, read_trajectory, write_trajectory, Backend, EquilibriumDriftObserver,
    KernelObserver, MassObserver, PerturbationObserver,
};
use hfdyn::linear_response::ResponseKind;
use hfdyn::{
    correlation_kernel, dispersion_relation, dispersive_decay_fit, equilibrium_correlation, extract_scattering_state,
    smallness_report, DispersionRelation64, Error, EvolveOptions, FieldState64, HartreeFock64, InteractionPotential64,
    MomentumDistribution64, Observer, ResponseModel64, Trajectory, VTrajectory64, Verdict,
};
use serde::Serialize;

use crate::config::{invalid, BackendConfig, RunConfig};
use crate::output::{Cell, Csv, OutputDir};
use crate::CliError;

/// Block norms below this count as exact cancellation.
const ZERO_NORM: f64 = 1e-12;

/// Result of a subcommand that ran to completion.
#[derive(Debug)]
pub struct Outcome {
    pub status: String,
    pub code: i32,
    pub last_good_time: Option<f64>,
}

impl Outcome {
    fn new(status: &str, code: i32) -> Self {
        Self {
            status: status.to_string(),
            code,
            last_good_time: None,
        }
    }
}

struct Model {
    w: InteractionPotential64,
    g: MomentumDistribution64,
    theta: DispersionRelation64,
}

fn model(cfg: &RunConfig) -> Result<Model, CliError> {
    let grid = cfg.build_grid()?;
    let w = cfg.build_potential(&grid)?;
    let g = cfg.build_distribution(&grid)?;
    let theta = dispersion_relation(&w, &g)?;
    Ok(Model { w, g, theta })
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 2,
        Verdict::Warning => 3,
    }
}

#[derive(Serialize)]
struct ViolationReport<'a> {
    verdict: Verdict,
    lambda_star: f64,
    reason: &'a str,
}

pub fn check_hypotheses(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let cert = match smallness_report(&m.w, &m.g, &m.theta, cfg.hypotheses.threshold) {
        Ok(c) => c,
        Err(Error::HypothesisViolation(reason)) => {
            let report = ViolationReport {
                verdict: Verdict::Fail,
                lambda_star: m.theta.lambda_star(),
                reason: &reason,
            };
            out.write_json("certificate.json", &report)?;
            println!("lambda_star  {:e}\nverdict      fail ({reason})", report.lambda_star);
            return Ok(Outcome::new("fail", 2));
        }
        Err(e) => return Err(e.into()),
    };
    out.write("certificate.json", format!("{}\n", cert.to_json()).as_bytes())?;
    let mut csv = Csv::new(&["quantity", "value"]);
    csv.row(&[Cell::S("lambda_star"), Cell::F(cert.lambda_star)]);
    for (k, v) in &cert.norms {
        csv.row(&[Cell::S(k), Cell::F(*v)]);
    }
    csv.row(&[Cell::S("smallness_lhs"), Cell::F(cert.smallness_lhs)]);
    csv.row(&[
        Cell::S("smallness_threshold"),
        Cell::F(cert.smallness_threshold.unwrap_or(f64::INFINITY)),
    ]);
    if let Some(r) = cert.response_norm {
        csv.row(&[Cell::S("response_norm"), Cell::F(r)]);
    }
    out.write("certificate.csv", &csv.into_bytes())?;
    print!("{}", cert.table());
    Ok(Outcome::new(cert.verdict.as_str(), verdict_code(cert.verdict)))
}

fn initial_state(cfg: &RunConfig, m: &Model) -> Result<FieldState64, CliError> {
    let grid = m.g.grid();
    let orbital = match cfg.build_profile(grid)? {
        Some(p) => FieldState64::perturbed(&m.g, &p, cfg.perturbation.epsilon)?,
        None => FieldState64::equilibrium(&m.g),
    };
    Ok(match cfg.backend {
        BackendConfig::Orbital => orbital,
        BackendConfig::MonteCarlo { realizations } => FieldState64::monte_carlo(&orbital, realizations, cfg.seed)?,
    })
}

fn run(cfg: &RunConfig, m: &Model) -> Result<Trajectory<f64>, CliError> {
    let time = cfg.time()?;
    let initial = initial_state(cfg, m)?;
    let reference = equilibrium_correlation(&m.g);
    let separations = default_separations(&m.w);
    let opts = EvolveOptions {
        duration: time.t,
        dt: time.dt,
        observer_stride: time.observer_stride,
        checkpoint_stride: Some(time.checkpoint_stride),
    };
    let mut mass = MassObserver::default();
    let mut kernel = KernelObserver {
        reference: &reference,
        separations: &separations,
    };
    let mut perturbation = PerturbationObserver { theta: &m.theta };
    let mut drift = EquilibriumDriftObserver { theta: &m.theta };
    let mut observers: Vec<&mut dyn Observer<f64>> = vec![&mut mass, &mut kernel];
    if initial.backend() == Backend::Orbital {
        observers.push(&mut perturbation);
        if cfg.perturbation.epsilon == 0.0 {
            observers.push(&mut drift);
        }
    }
    let hf = HartreeFock64::new(&m.w);
    Ok(evolve_partial(&hf, &initial, &opts, &mut observers))
}

#[derive(Serialize)]
struct EvolveSummary {
    status: String,
    final_time: f64,
    checkpoints: usize,
    max_mass_drift: f64,
    mass_drift_per_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

pub fn evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let traj = run(cfg, &m)?;
    let reference = equilibrium_correlation(&m.g);
    let separations = default_separations(&m.w);
    let kernels = traj
        .checkpoints
        .iter()
        .map(|s| correlation_kernel(s, &reference, &separations))
        .collect::<Result<Vec<_>, _>>()?;
    write_trajectory(&out.path("trajectory"), &traj.checkpoints, Some(&kernels))?;
    out.record_tree("trajectory")?;

    let mut csv = Csv::new(&["time", "observable", "value"]);
    for r in &traj.records {
        csv.row(&[Cell::F(r.time), Cell::S(&r.observable), Cell::F(r.value)]);
    }
    out.write("observers.csv", &csv.into_bytes())?;

    let max_drift = traj
        .records
        .iter()
        .filter(|r| r.observable == "mass_drift")
        .fold(0.0f64, |a, r| a.max(r.value));
    let elapsed = traj.last_good_time();
    let rate = if elapsed > 0.0 { max_drift / elapsed } else { max_drift };
    let mut outcome = match &traj.failure {
        None if rate > cfg.tolerances.mass_drift => Outcome::new("mass_drift_warning", 3),
        None => Outcome::new("ok", 0),
        Some(Error::BlowUp { .. }) => Outcome::new("blow_up", 4),
        Some(e) => return Err(e.clone().into()),
    };
    if traj.failure.is_some() {
        outcome.last_good_time = Some(elapsed);
    }
    out.write_json(
        "evolve.json",
        &EvolveSummary {
            status: outcome.status.clone(),
            final_time: elapsed,
            checkpoints: traj.checkpoints.len(),
            max_mass_drift: max_drift,
            mass_drift_per_time: rate,
            failure: traj.failure.as_ref().map(|e| e.to_string()),
        },
    )?;
    Ok(outcome)
}

#[derive(Serialize)]
struct ResponseReport {
    verdict: &'static str,
    norm: f64,
    dt: f64,
    steps: usize,
    separations: Vec<Vec<isize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    neumann_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
}

pub fn linear_response(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let lr = &cfg.linear_response;
    let grid = m.g.grid();
    let rm = ResponseModel64::new(&m.w, &m.g, &m.theta)?;
    let separations = rm.required_separations();
    let op = rm.response_operator_norm(ResponseKind::Sum, lr.dt, lr.steps, &separations)?;
    let mut header = vec!["zeta"];
    let axes = ["xi_1", "xi_2", "xi_3", "xi_4"];
    header.extend(&axes[..grid.dim()]);
    header.push("norm");
    let mut csv = Csv::new(&header);
    for b in &op.blocks {
        let mut row = vec![Cell::U(b.zeta)];
        row.extend(b.frequency.iter().map(|v| Cell::F(*v)));
        row.push(Cell::F(b.norm));
        csv.row(&row);
    }
    out.write("response.csv", &csv.into_bytes())?;

    let rhs = VTrajectory64::random_hermitian(grid, lr.dt, lr.steps, separations.clone(), lr.amplitude, cfg.seed)?;
    let mut report = ResponseReport {
        verdict: "invertible",
        norm: op.norm,
        dt: lr.dt,
        steps: lr.steps,
        separations: separations.iter().map(|z| z[..grid.dim()].to_vec()).collect(),
        neumann_terms: None,
        residual: None,
    };
    let outcome = match rm.invert_response(&rhs) {
        Ok(sol) => {
            report.neumann_terms = Some(sol.terms);
            report.residual = Some(sol.residual);
            if op.norm <= ZERO_NORM {
                report.verdict = "trivially_invertible";
            }
            Outcome::new(report.verdict, 0)
        }
        Err(Error::InvertibilityNotCertified { norm }) => {
            report.verdict = "not_certified";
            report.norm = norm;
            Outcome::new("not_certified", 5)
        }
        Err(e) => return Err(e.into()),
    };
    out.write_json("response.json", &report)?;
    println!("norm     {:e}\nverdict  {}", report.norm, report.verdict);
    Ok(outcome)
}

#[derive(Serialize)]
struct ScatterReport {
    #[serde(flatten)]
    summary: hfdyn::diagnostics::ScatteringSummary,
    z_norms: ZNorms,
}

pub fn scatter(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let states = match &cfg.scatter.trajectory {
        Some(dir) => {
            let stored = read_trajectory::<f64>(dir)?;
            if stored.states.first().map(|s| s.grid()) != Some(m.g.grid()) {
                return Err(invalid("scatter.trajectory", "stored grid differs from [grid]"));
            }
            stored.states
        }
        None => {
            if cfg.backend != BackendConfig::Orbital {
                return Err(invalid("backend", "scatter needs the orbital backend"));
            }
            let traj = run(cfg, &m)?;
            if let Some(e) = traj.failure {
                return Err(e.into());
            }
            traj.checkpoints
        }
    };
    let t = match cfg.scatter.time {
        Some(t) => t,
        None => cfg.time()?.t,
    };
    let rep = extract_scattering_state(&states, &m.theta, t)?;
    let upto: Vec<_> = states
        .iter()
        .filter(|s| s.time() <= rep.extraction_time)
        .cloned()
        .collect();
    let report = ScatterReport {
        summary: rep.summary(),
        z_norms: z_norms(&perturbation_states(&upto, &m.theta)?)?,
    };
    let mut csv = Csv::new(&["time", "residual"]);
    for (t, r) in rep.times.iter().zip(&rep.residuals) {
        csv.row(&[Cell::F(*t), Cell::F(*r)]);
    }
    out.write("scatter.csv", &csv.into_bytes())?;
    out.write_json("scatter.json", &report)?;
    println!(
        "T        {}\n|Z_inf|  {:e}\ngap      {:e}",
        rep.extraction_time, rep.norm, rep.stability_gap
    );
    Ok(Outcome::new("extracted", 0))
}

#[derive(Serialize)]
struct DecayReport {
    verdict: Verdict,
    expected: f64,
    tolerance: f64,
    #[serde(flatten)]
    fit: hfdyn::DecayFit,
}

pub fn decay(cfg: &RunConfig, out: &mut OutputDir) -> Result<Outcome, CliError> {
    let m = model(cfg)?;
    let dc = &cfg.decay;
    let fit = dispersive_decay_fit(&m.theta, dc.shell, (dc.t_min, dc.t_max), dc.samples)?;
    let expected = -(cfg.grid.d as f64) / 2.0;
    let tolerance = cfg.tolerances.decay_exponent;
    let verdict = if (fit.exponent - expected).abs() <= tolerance * expected.abs() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut csv = Csv::new(&["time", "sup"]);
    for (t, s) in fit.times.iter().zip(&fit.sup) {
        csv.row(&[Cell::F(*t), Cell::F(*s)]);
    }
    out.write("decay.csv", &csv.into_bytes())?;
    println!(
        "exponent  {}\nexpected  {expected}\nverdict   {}",
        fit.exponent,
        verdict.as_str()
    );
    out.write_json(
        "decay.json",
        &DecayReport {
            verdict,
            expected,
            tolerance,
            fit,
        },
    )?;
    Ok(Outcome::new(verdict.as_str(), verdict_code(verdict)))
}
