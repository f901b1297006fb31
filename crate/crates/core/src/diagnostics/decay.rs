use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::DispersionRelation;
use crate::error::{Error, Result};
use crate::scalar::{cis, lit, to_f64, two_pi_pow_half_d, Real};

/// Measured decay of `sup_x |S(t)P_λ δ|` on `[t_min, t_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub shell: i32,
    /// Least-squares slope of `log sup` against `log t`.
    pub exponent: f64,
    pub intercept: f64,
    pub t_wrap: f64,
    pub times: Vec<f64>,
    pub sup: Vec<f64>,
}

/// Smooth dyadic bump `φ(|ξ|/2^j)`, positive exactly on `2^{j-1} < |ξ| < 2^{j+1}`
/// and equal to one at `|ξ| = 2^j`.
fn bump(r: f64, j: i32) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let s = (r / 2f64.powi(j)).log2();
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Time for the fastest packet launched from the origin with frequencies in
/// the support of the dyadic bump at `2^j` to reach distance `L/2`, where it
/// meets its periodic image.
pub fn wrap_time<T: Real>(theta: &DispersionRelation<T>, shell: i32) -> f64 {
    let grid = theta.grid();
    let v = to_f64(theta.max_group_velocity(lit(2f64.powi(shell - 1)), lit(2f64.powi(shell + 1))));
    if v > 0.0 {
        0.5 * to_f64(grid.length()) / v
    } else {
        f64::INFINITY
    }
}

/// `t_k`, `k < samples`, log-spaced on `[t_min, t_max]`.
fn log_times(t_min: f64, t_max: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![t_min];
    }
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..samples)
        .map(|k| (a + (b - a) * k as f64 / (samples - 1) as f64).exp())
        .collect()
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits the decay exponent of `S(t)P_λ u₀` for a unit-mass lattice point
/// source `u₀ = Δx^{-d}δ_0`, with `λ = 2^j`. `P_λ` is the smooth multiplier
/// `φ(|ξ|/λ)` supported in `λ/2 < |ξ| < 2λ`; a sharp annulus would add edge
/// terms that decay more slowly than the stationary point.
///
/// The grid of `θ` is the decay box; it should be large compared with the
/// spreading of the packet. Windows reaching past [`wrap_time`] are refused.
pub fn dispersive_decay_fit<T: Real>(
    theta: &DispersionRelation<T>,
    shell: i32,
    t_range: (f64, f64),
    samples: usize,
) -> Result<DecayFit> {
    let (t_min, t_max) = t_range;
    if !(t_min > 0.0 && t_max > t_min) || samples < 2 {
        return Err(Error::Domain(format!(
            "decay fit needs 0 < t_min < t_max and at least two samples, got [{t_min}, {t_max}] with {samples}"
        )));
    }
    if !(theta.lambda_star() > T::zero()) {
        return Err(Error::HypothesisViolation(format!(
            "dispersive decay needs uniform ellipticity, lambda* = {}",
            theta.lambda_star()
        )));
    }
    let grid = theta.grid();
    let nyquist = to_f64(grid.nyquist());
    if 2f64.powi(shell + 1) > nyquist || 2f64.powi(shell - 1) < to_f64(grid.dxi()) {
        return Err(Error::Domain(format!(
            "shell {shell} is not resolved: its support must lie in [{}, {nyquist}]",
            to_f64(grid.dxi())
        )));
    }
    let t_wrap = wrap_time(theta, shell);
    if t_max > t_wrap {
        return Err(Error::WrapWindow { t_min, t_max, t_wrap });
    }
    // Transform of the point source: (2π)^{-d/2}Δx^d·Δx^{-d}.
    let amplitude = T::one() / two_pi_pow_half_d::<T>(grid.dim());
    let source: Vec<(usize, T, T)> = (0..grid.sites())
        .filter_map(|i| {
            let b = bump(to_f64(grid.xi_sq(i)).sqrt(), shell);
            (b > 0.0).then(|| (i, theta.theta()[i], lit::<T>(b) * amplitude))
        })
        .collect();
    let times = log_times(t_min, t_max, samples);
    let sup: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let mut data = vec![Complex::new(T::zero(), T::zero()); grid.sites()];
            for &(i, th, a) in &source {
                data[i] = cis(-th * lit::<T>(t)) * a;
            }
            grid.inverse_in_place(&mut data);
            to_f64(data.iter().fold(T::zero(), |a, v| a.max(v.norm())))
        })
        .collect();
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = sup.iter().map(|s| s.ln()).collect();
    let (exponent, intercept) = least_squares(&lx, &ly);
    Ok(DecayFit {
        shell,
        exponent,
        intercept,
        t_wrap,
        times,
        sup,
    })
}
