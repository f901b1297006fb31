use serde::{Deserialize, Serialize};

use crate::dynamics::FieldState;
use crate::equilibrium::DispersionRelation;
use crate::error::{Error, Result};
use crate::lattice::SpectralField;
use crate::linear_response::linear_group;
use crate::scalar::{to_f64, Real};

/// Relative slack when matching a requested time to a checkpoint.
const TIME_SLACK: f64 = 1e-9;

/// Candidate scattering state `Z_∞ = S(-T)Z(T)` with its diagnostics.
#[derive(Clone, Debug)]
pub struct ScatteringReport<T: Real> {
    /// Checkpoint time actually used as `T`.
    pub extraction_time: f64,
    /// Checkpoint time used for the `T/2` recomputation.
    pub half_time: f64,
    /// `Z_∞` per orbital mode, position representation.
    pub z_infinity: Vec<SpectralField<T>>,
    pub weights: Vec<T>,
    pub times: Vec<f64>,
    /// `r(t_n) = ‖Z(t_n) - S(t_n)Z_∞‖_{L²_ω L²_x}` for checkpoints up to `T`.
    pub residuals: Vec<f64>,
    /// `‖Z_∞(T) - Z_∞(T/2)‖_{L²_ω L²_x}`.
    pub stability_gap: f64,
    /// `‖Z_∞‖_{L²_ω L²_x}`.
    pub norm: f64,
}

/// The serialisable part of a [`ScatteringReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringSummary {
    pub extraction_time: f64,
    pub half_time: f64,
    pub norm: f64,
    pub stability_gap: f64,
    pub final_residual: f64,
    pub max_residual: f64,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl<T: Real> ScatteringReport<T> {
    pub fn summary(&self) -> ScatteringSummary {
        ScatteringSummary {
            extraction_time: self.extraction_time,
            half_time: self.half_time,
            norm: self.norm,
            stability_gap: self.stability_gap,
            final_residual: *self.residuals.last().unwrap_or(&0.0),
            max_residual: self.residuals.iter().fold(0.0, |a, r| a.max(*r)),
            times: self.times.clone(),
            residuals: self.residuals.clone(),
        }
    }
}

fn weighted_distance<T: Real>(a: &[SpectralField<T>], b: &[SpectralField<T>], weights: &[T]) -> Result<f64> {
    let mut total = T::zero();
    for ((u, v), n) in a.iter().zip(b).zip(weights) {
        let mut d = u.clone();
        d.axpy(num_complex::Complex::new(-T::one(), T::zero()), v)?;
        total += *n * d.norm_sq();
    }
    Ok(to_f64(total.sqrt()))
}

fn weighted_norm<T: Real>(a: &[SpectralField<T>], weights: &[T]) -> f64 {
    to_f64(
        a.iter()
            .zip(weights)
            .fold(T::zero(), |acc, (u, n)| acc + *n * u.norm_sq())
            .sqrt(),
    )
}

/// Latest checkpoint with time `≤ t` (up to a relative slack).
fn checkpoint_at<T: Real>(states: &[FieldState<T>], t: f64) -> Option<usize> {
    let slack = TIME_SLACK * t.abs().max(1.0);
    states.iter().rposition(|s| to_f64(s.time()) <= t + slack)
}

fn pull_back<T: Real>(theta: &DispersionRelation<T>, state: &FieldState<T>) -> Result<Vec<SpectralField<T>>> {
    let t = state.time();
    state
        .perturbation(theta)?
        .iter()
        .map(|z| linear_group(theta, z, -t))
        .collect()
}

/// `Z_∞ = S(-T)Z(T)` from the orbital checkpoints of a run, with the residual
/// curve against every checkpoint up to `T` and the gap to the state
/// extracted at `T/2`.
pub fn extract_scattering_state<T: Real>(
    states: &[FieldState<T>],
    theta: &DispersionRelation<T>,
    t: f64,
) -> Result<ScatteringReport<T>> {
    let last = states
        .last()
        .ok_or_else(|| Error::IncompleteInput("scattering extraction needs checkpoints".into()))?;
    let available = to_f64(last.time());
    if available + TIME_SLACK * t.abs().max(1.0) < t {
        return Err(Error::TrajectoryTooShort {
            available,
            requested: t,
        });
    }
    let end = checkpoint_at(states, t).ok_or(Error::TrajectoryTooShort {
        available,
        requested: t,
    })?;
    let half = checkpoint_at(states, 0.5 * t).ok_or(Error::TrajectoryTooShort {
        available,
        requested: 0.5 * t,
    })?;
    let weights = states[end].weights().to_vec();
    let z_inf = pull_back(theta, &states[end])?;
    let z_half = pull_back(theta, &states[half])?;
    let mut times = Vec::with_capacity(end + 1);
    let mut residuals = Vec::with_capacity(end + 1);
    for s in &states[..=end] {
        let z = s.perturbation(theta)?;
        let free = z_inf
            .iter()
            .map(|f| linear_group(theta, f, s.time()))
            .collect::<Result<Vec<_>>>()?;
        times.push(to_f64(s.time()));
        residuals.push(weighted_distance(&z, &free, &weights)?);
    }
    Ok(ScatteringReport {
        extraction_time: to_f64(states[end].time()),
        half_time: to_f64(states[half].time()),
        stability_gap: weighted_distance(&z_inf, &z_half, &weights)?,
        norm: weighted_norm(&z_inf, &weights),
        z_infinity: z_inf,
        weights,
        times,
        residuals,
    })
}

/// Convenience: `Z_∞` at the time of the last checkpoint.
pub fn extract_at_end<T: Real>(states: &[FieldState<T>], theta: &DispersionRelation<T>) -> Result<ScatteringReport<T>> {
    let t = states.last().map(|s| to_f64(s.time())).unwrap_or(0.0);
    extract_scattering_state(states, theta, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve, gaussian_bump, EvolveOptions, HartreeFock};
    use crate::equilibrium::{dispersion_relation, InteractionPotential, MomentumDistribution};
    use crate::lattice::Grid;

    fn run(
        w: &InteractionPotential<f64>,
        g: &MomentumDistribution<f64>,
        eps: f64,
        duration: f64,
    ) -> Vec<FieldState<f64>> {
        let grid = g.grid().clone();
        let s0 = FieldState::perturbed(g, &gaussian_bump(&grid, [0.0; 4], 1.0, [1.0, 0.0, 0.0, 0.0]), eps).unwrap();
        let opts = EvolveOptions {
            duration,
            dt: 0.01,
            observer_stride: 1000,
            checkpoint_stride: Some(10),
        };
        evolve(&HartreeFock::new(w), &s0, &opts, &mut []).unwrap().checkpoints
    }

    #[test]
    fn free_run_scatters_to_initial_perturbation() {
        let grid = Grid::<f64>::new(1, 64, 20.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 0.5, 0.8).unwrap();
        let w = InteractionPotential::zero(&grid);
        let th = dispersion_relation(&w, &g).unwrap();
        let states = run(&w, &g, 0.1, 1.0);
        let rep = extract_scattering_state(&states, &th, 1.0).unwrap();
        let z0 = states[0].perturbation(&th).unwrap();
        let gap = weighted_distance(&rep.z_infinity, &z0, &rep.weights).unwrap();
        assert!(gap < 1e-12, "{gap}");
        assert!(rep.residuals.iter().all(|r| *r < 1e-12), "{:?}", rep.residuals);
        assert!(rep.stability_gap < 1e-12);
        assert!((rep.norm - 0.1).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_run_has_zero_state() {
        let grid = Grid::<f64>::new(1, 32, 10.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 0.5, 0.8).unwrap();
        let w = InteractionPotential::symmetric_pair(&grid, [1.25, 0.0, 0.0, 0.0], 0.3).unwrap();
        let th = dispersion_relation(&w, &g).unwrap();
        let states = run(&w, &g, 0.0, 0.5);
        let rep = extract_scattering_state(&states, &th, 0.5).unwrap();
        assert!(rep.norm < 1e-10, "{}", rep.norm);
    }

    #[test]
    fn short_trajectory_is_reported() {
        let grid = Grid::<f64>::new(1, 32, 10.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 0.5, 0.8).unwrap();
        let w = InteractionPotential::zero(&grid);
        let th = dispersion_relation(&w, &g).unwrap();
        let states = run(&w, &g, 0.01, 0.2);
        assert!(matches!(
            extract_scattering_state(&states, &th, 1.0),
            Err(Error::TrajectoryTooShort { .. })
        ));
    }
}
