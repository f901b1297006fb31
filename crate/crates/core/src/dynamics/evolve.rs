use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{correlation_kernel, plane_wave, FieldState, HartreeFock};
use crate::equilibrium::{DispersionRelation, EquilibriumCorrelation};
use crate::error::{Error, Result};
use crate::lattice::Offset;
use crate::scalar::{lit, to_f64, Real};

/// One observer sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub time: f64,
    pub observable: String,
    pub value: f64,
}

/// Callback run on the coordinating thread at observer strides.
pub trait Observer<T: Real> {
    fn observe(&mut self, state: &FieldState<T>) -> Result<Vec<(String, f64)>>;
}

/// Time-stepping parameters for [`evolve`].
#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions<T: Real> {
    /// Duration of the run; the sign of `dt` sets the direction.
    pub duration: T,
    pub dt: T,
    pub observer_stride: usize,
    /// Keep a copy of the state every this many steps.
    pub checkpoint_stride: Option<usize>,
}

/// Output of [`evolve`]; checkpoints include the initial and final states.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub checkpoints: Vec<FieldState<T>>,
    pub records: Vec<Record>,
    pub final_state: FieldState<T>,
    /// Set when the run stopped early.
    pub failure: Option<Error>,
}

impl<T: Real> Trajectory<T> {
    pub fn last_good_time(&self) -> f64 {
        to_f64(self.final_state.time())
    }

    pub fn checkpoint_times(&self) -> Vec<T> {
        self.checkpoints.iter().map(|s| s.time()).collect()
    }
}

fn observe_all<T: Real>(
    observers: &mut [&mut dyn Observer<T>],
    state: &FieldState<T>,
    out: &mut Vec<Record>,
) -> Result<()> {
    for obs in observers.iter_mut() {
        for (name, value) in obs.observe(state)? {
            out.push(Record {
                time: to_f64(state.time()),
                observable: name,
                value,
            });
        }
    }
    Ok(())
}

/// Runs Strang steps and keeps whatever was produced if a step fails.
pub fn evolve_partial<T: Real>(
    model: &HartreeFock<T>,
    initial: &FieldState<T>,
    options: &EvolveOptions<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Trajectory<T> {
    let t0 = initial.time();
    let dt = options.dt;
    let ratio = to_f64(options.duration / dt);
    let steps = if ratio > 0.0 { (ratio - 1e-9).ceil() as usize } else { 0 };
    let stride = options.observer_stride.max(1);
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();
    let mut state = initial.clone();
    let mut failure = observe_all(observers, &state, &mut records).err();
    if options.checkpoint_stride.is_some() {
        checkpoints.push(state.clone());
    }
    for k in 1..=steps {
        if failure.is_some() {
            break;
        }
        let target = if k == steps {
            t0 + options.duration
        } else {
            t0 + dt * lit(k as f64)
        };
        let h = target - state.time();
        match model.step_strang(&state, h) {
            Ok(mut next) => {
                next.set_time(target);
                state = next;
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
        if k % stride == 0 || k == steps {
            if let Err(e) = observe_all(observers, &state, &mut records) {
                failure = Some(e);
            }
        }
        if let Some(cs) = options.checkpoint_stride {
            if k % cs.max(1) == 0 || k == steps {
                checkpoints.push(state.clone());
            }
        }
    }
    if let Some(e) = &failure {
        log::warn!("evolution stopped at t = {}: {e}", to_f64(state.time()));
    }
    Trajectory {
        checkpoints,
        records,
        final_state: state,
        failure,
    }
}

/// Evolves `initial` over `options.duration`, failing on blow-up.
pub fn evolve<T: Real>(
    model: &HartreeFock<T>,
    initial: &FieldState<T>,
    options: &EvolveOptions<T>,
    observers: &mut [&mut dyn Observer<T>],
) -> Result<Trajectory<T>> {
    let mut traj = evolve_partial(model, initial, options, observers);
    match traj.failure.take() {
        Some(e) => Err(e),
        None => Ok(traj),
    }
}

/// Total mass and its drift relative to the first observation.
#[derive(Default)]
pub struct MassObserver {
    initial: Option<f64>,
}

impl<T: Real> Observer<T> for MassObserver {
    fn observe(&mut self, state: &FieldState<T>) -> Result<Vec<(String, f64)>> {
        let m = to_f64(state.total_mass());
        let m0 = *self.initial.get_or_insert(m);
        let drift = if m0 != 0.0 { (m - m0).abs() / m0 } else { m.abs() };
        Ok(vec![("mass".into(), m), ("mass_drift".into(), drift)])
    }
}

/// For orbitals started as plane waves: worst deviation of each orbital from
/// `e^{i(ξ_k·x - θ_k t)}` split into amplitude and phase.
pub struct EquilibriumDriftObserver<'a, T: Real> {
    pub theta: &'a DispersionRelation<T>,
}

impl<T: Real> Observer<T> for EquilibriumDriftObserver<'_, T> {
    fn observe(&mut self, state: &FieldState<T>) -> Result<Vec<(String, f64)>> {
        if state.modes().len() != state.len() {
            return Err(Error::IncompleteInput("drift observer needs reference modes".into()));
        }
        let (mut amp, mut phase, mut shape) = (0.0f64, 0.0f64, 0.0f64);
        let t = state.time();
        for (u, &site) in state.fields().iter().zip(state.modes()) {
            let e = plane_wave(state.grid(), site);
            let n = lit::<T>(state.grid().sites() as f64);
            let a: Complex<T> = e
                .data()
                .iter()
                .zip(u.data())
                .map(|(x, y)| x.conj() * *y)
                .sum::<Complex<T>>()
                / n;
            let p = self.theta.theta()[site] * t;
            let rotated = a * Complex::new(p.cos(), p.sin());
            amp = amp.max(to_f64((a.norm() - T::one()).abs()));
            phase = phase.max(to_f64(rotated.arg().abs()));
            let resid = e
                .data()
                .iter()
                .zip(u.data())
                .fold(T::zero(), |acc, (x, y)| acc.max((*y - *x * a).norm()));
            shape = shape.max(to_f64(resid));
        }
        Ok(vec![
            ("amplitude_drift".into(), amp),
            ("phase_error".into(), phase),
            ("shape_error".into(), shape),
        ])
    }
}

/// `‖Z(t)‖_{L²_ω L²_x}` against the equilibrium.
pub struct PerturbationObserver<'a, T: Real> {
    pub theta: &'a DispersionRelation<T>,
}

impl<T: Real> Observer<T> for PerturbationObserver<'_, T> {
    fn observe(&mut self, state: &FieldState<T>) -> Result<Vec<(String, f64)>> {
        Ok(vec![(
            "perturbation_l2".into(),
            to_f64(state.perturbation_norm(self.theta)?),
        )])
    }
}

/// `sup |V(x, z)|` over the separation set.
pub struct KernelObserver<'a, T: Real> {
    pub reference: &'a EquilibriumCorrelation<T>,
    pub separations: &'a [Offset],
}

impl<T: Real> Observer<T> for KernelObserver<'_, T> {
    fn observe(&mut self, state: &FieldState<T>) -> Result<Vec<(String, f64)>> {
        let v = correlation_kernel(state, self.reference, self.separations)?;
        Ok(vec![("kernel_sup".into(), to_f64(v.sup()))])
    }
}
