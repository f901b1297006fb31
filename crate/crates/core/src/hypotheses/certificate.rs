use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::sobolev::{derivative_sum, theta_tilde_norm, third_derivative_seminorm, third_derivative_sup, Exponent};
use crate::equilibrium::{dispersion_relation, DispersionRelation, InteractionPotential, MomentumDistribution};
use crate::error::{Error, Result};
use crate::linear_response::{ResponseKind, ResponseModel};
use crate::scalar::{lit, to_f64, Real};

/// Relative width at which the operator-norm bisection stops.
const BISECTION_TOLERANCE: f64 = 1e-4;
/// Scales of `g` beyond `2^SCALE_SEARCH` are not explored.
const SCALE_SEARCH: i32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Warning,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Warning => "warning",
            Verdict::Fail => "fail",
        }
    }
}

/// How the smallness threshold is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// A fixed constant `c`.
    Configured { threshold: f64 },
    /// The largest `c` for which the discretised `‖L₃+L₄‖` on the time grid
    /// `t_n = n·dt`, `n ≤ steps`, stays below one.
    OperatorNorm { dt: f64, steps: usize },
}

/// Norms, ellipticity constant and verdicts for one `(w, g)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub dim: usize,
    /// `s_c = d/2 - 1`.
    pub critical_regularity: f64,
    pub lambda_star: f64,
    /// Frequency at which `λ*` is attained.
    pub lambda_site: Vec<f64>,
    pub norms: BTreeMap<String, f64>,
    pub smallness_lhs: f64,
    /// `None` when no scale of `g` up to `2^30` pushes `‖L₃+L₄‖` to one.
    pub smallness_threshold: Option<f64>,
    pub threshold_mode: ThresholdMode,
    /// `‖L₃+L₄‖` at the given `g` (operator-norm mode only).
    pub response_norm: Option<f64>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
}

impl StabilityCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serialises")
    }

    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self.norms.keys().map(|k| k.len()).max().unwrap_or(0).max(20);
        let _ = writeln!(out, "{:<width$}  value", "quantity");
        let _ = writeln!(out, "{:<width$}  {:e}", "lambda_star", self.lambda_star);
        for (k, v) in &self.norms {
            let _ = writeln!(out, "{k:<width$}  {v:e}");
        }
        let _ = writeln!(out, "{:<width$}  {:e}", "smallness_lhs", self.smallness_lhs);
        match self.smallness_threshold {
            Some(t) => {
                let _ = writeln!(out, "{:<width$}  {t:e}", "smallness_threshold");
            }
            None => {
                let _ = writeln!(out, "{:<width$}  unbounded", "smallness_threshold");
            }
        }
        if let Some(n) = self.response_norm {
            let _ = writeln!(out, "{:<width$}  {n:e}", "response_norm");
        }
        for (k, v) in &self.verdicts {
            let _ = writeln!(out, "{:<width$}  {}", format!("verdict.{k}"), v.as_str());
        }
        let _ = writeln!(out, "{:<width$}  {}", "verdict", self.verdict.as_str());
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

pub fn weighted_tv_norm<T: Real>(w: &InteractionPotential<T>, m: u32) -> Result<T> {
    w.weighted_tv_norm(m)
}

/// `λ*`, the smallest Hessian eigenvalue of `θ` over the lattice.
pub fn ellipticity_constant<T: Real>(theta: &DispersionRelation<T>) -> T {
    theta.lambda_star()
}

pub fn critical_regularity(dim: usize) -> f64 {
    dim as f64 / 2.0 - 1.0
}

/// `‖∇g‖_{W^{2,1}}`, taken as `Σ_{1 ≤ |α| ≤ 3} ‖∂^α g‖_{ℓ¹}`.
pub fn gradient_norm<T: Real>(g: &MomentumDistribution<T>) -> T {
    derivative_sum(&g.as_field(), 1..=3, Exponent::One, 0)
}

/// `‖⟨y⟩w‖_M · ‖∇g‖_{W^{2,1}}`.
pub fn smallness_lhs<T: Real>(w: &InteractionPotential<T>, g: &MomentumDistribution<T>) -> Result<T> {
    Ok(w.weighted_tv_norm(1)? * gradient_norm(g))
}

/// `‖L₃+L₄‖` for `(w, s·g)` with `θ` rebuilt at that scale.
fn scaled_response_norm<T: Real>(
    w: &InteractionPotential<T>,
    g: &MomentumDistribution<T>,
    s: T,
    dt: T,
    steps: usize,
) -> Result<f64> {
    let gs = g.scaled(s);
    let th = dispersion_relation(w, &gs)?;
    let model = ResponseModel::new(w, &gs, &th)?;
    let seps = model.required_separations();
    Ok(model.response_operator_norm(ResponseKind::Sum, dt, steps, &seps)?.norm)
}

/// Largest scale `s` of `g` with `‖L₃+L₄‖ < 1`, by bracketing and bisection.
/// Also returns the norm at `s = 1`.
fn critical_scale<T: Real>(
    w: &InteractionPotential<T>,
    g: &MomentumDistribution<T>,
    dt: T,
    steps: usize,
) -> Result<(Option<f64>, f64)> {
    let norm_at = |s: f64| scaled_response_norm(w, g, lit(s), dt, steps);
    let at_one = norm_at(1.0)?;
    let (mut lo, mut hi) = if at_one < 1.0 {
        let mut lo = 1.0;
        let mut hi = 2.0;
        loop {
            if norm_at(hi)? >= 1.0 {
                break (lo, hi);
            }
            if hi >= 2f64.powi(SCALE_SEARCH) {
                return Ok((None, at_one));
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        let mut hi = 1.0;
        let mut lo = 0.5;
        while norm_at(lo)? >= 1.0 {
            if lo <= 2f64.powi(-SCALE_SEARCH) {
                return Ok((Some(0.0), at_one));
            }
            hi = lo;
            lo *= 0.5;
        }
        (lo, hi)
    };
    while hi - lo > BISECTION_TOLERANCE * hi {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((Some(lo), at_one))
}

/// Builds the full certificate for `(w, g)` with dispersion relation `θ`.
///
/// In operator-norm mode the threshold is `s*·lhs`, where `s*` is the largest
/// scale of `g` (with `θ` rebuilt) keeping `‖L₃+L₄‖ < 1`; since `lhs` is linear
/// in `g`, this is the largest admissible value of the smallness product
/// along the ray through `g`.
pub fn smallness_report<T: Real>(
    w: &InteractionPotential<T>,
    g: &MomentumDistribution<T>,
    theta: &DispersionRelation<T>,
    mode: ThresholdMode,
) -> Result<StabilityCertificate> {
    if w.grid() != g.grid() || g.grid() != theta.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = g.grid();
    let d = grid.dim();
    let s_c = critical_regularity(d);
    let lambda_star = to_f64(ellipticity_constant(theta));
    let gf = g.as_field();
    let w_tv = to_f64(w.weighted_tv_norm(1)?);
    let grad_g = to_f64(gradient_norm(g));
    let lhs = w_tv * grad_g;

    let mut norms = BTreeMap::new();
    norms.insert("w_weighted_tv".to_string(), w_tv);
    norms.insert(
        "g_w3_1".to_string(),
        to_f64(derivative_sum(&gf, 0..=3, Exponent::One, 0)),
    );
    norms.insert(
        "g_w3_inf".to_string(),
        to_f64(derivative_sum(&gf, 0..=3, Exponent::Infinity, 0)),
    );
    let weight = 2 * s_c.ceil() as i32;
    norms.insert(
        "g_weighted_w2_1".to_string(),
        to_f64(derivative_sum(&gf, 0..=2, Exponent::One, weight)),
    );
    norms.insert("grad_g_w2_1".to_string(), grad_g);
    norms.insert(
        "theta_tilde_wd2_inf".to_string(),
        to_f64(theta_tilde_norm(theta, d + 2, Exponent::Infinity)),
    );
    norms.insert(
        "theta_tilde_w4_1".to_string(),
        to_f64(theta_tilde_norm(theta, 4, Exponent::One)),
    );
    norms.insert("theta_tilde_hess3_sup".to_string(), to_f64(third_derivative_sup(theta)));
    norms.insert(
        "theta_tilde_w3_inf_seminorm".to_string(),
        to_f64(third_derivative_seminorm(theta)),
    );

    let mut warnings = Vec::new();
    let mut verdicts = BTreeMap::new();
    verdicts.insert(
        "interaction".to_string(),
        if w_tv.is_finite() { Verdict::Pass } else { Verdict::Fail },
    );
    let regularity = if norms.values().any(|v| !v.is_finite()) {
        Verdict::Fail
    } else if let Some(msg) = g.resolution_warning() {
        warnings.push(msg.to_string());
        Verdict::Warning
    } else {
        Verdict::Pass
    };
    verdicts.insert("regularity".to_string(), regularity);
    verdicts.insert(
        "ellipticity".to_string(),
        if lambda_star > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    );

    let (threshold, response_norm) = match mode {
        ThresholdMode::Configured { threshold } => {
            if !(threshold > 0.0) {
                return Err(Error::Domain(format!(
                    "smallness threshold must be positive, got {threshold}"
                )));
            }
            (Some(threshold), None)
        }
        ThresholdMode::OperatorNorm { dt, steps } => {
            if !(lambda_star > 0.0) {
                return Err(Error::HypothesisViolation(format!(
                    "operator-norm threshold needs uniform ellipticity, lambda* = {lambda_star}"
                )));
            }
            let (scale, at_one) = critical_scale(w, g, lit(dt), steps)?;
            (scale.map(|s| s * lhs), Some(at_one))
        }
    };
    let small = match threshold {
        None => true,
        Some(c) => lhs < c,
    };
    verdicts.insert(
        "smallness".to_string(),
        if small { Verdict::Pass } else { Verdict::Fail },
    );
    let verdict = verdicts.values().copied().max().unwrap_or(Verdict::Pass);

    Ok(StabilityCertificate {
        dim: d,
        critical_regularity: s_c,
        lambda_star,
        lambda_site: grid.wavevector(theta.lambda_site())[..d]
            .iter()
            .map(|v| to_f64(*v))
            .collect(),
        norms,
        smallness_lhs: lhs,
        smallness_threshold: threshold,
        threshold_mode: mode,
        response_norm,
        verdicts,
        verdict,
        warnings,
    })
}
