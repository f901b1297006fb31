//! Time evolution of the Hartree-Fock equation with exchange.
//!
//! The random field is carried in finite-rank form, either as orbitals with
//! occupations (exact expectations) or as sampled realizations with equal
//! weights. Both share one state type and one mean-field implementation.

mod checkpoint;
mod evolve;
mod kernel;
mod mean_field;
mod state;
mod stepper;

pub use checkpoint::{read_trajectory, write_trajectory, CheckpointFiles, StoredTrajectory, TrajectoryHeader, SIDECAR};
pub use evolve::{
    evolve, evolve_partial, EquilibriumDriftObserver, EvolveOptions, KernelObserver, MassObserver, Observer,
    PerturbationObserver, Record, Trajectory,
};
pub use kernel::{check_separations, correlation_kernel, default_separations, CorrelationKernel};
pub use mean_field::{ExchangeRoute, FrozenField, HartreeFock};
pub use state::{gaussian_bump, plane_wave, Backend, FieldState};
pub use stepper::kinetic_flow;

/// `w ∗ ρ` for the state's density.
pub fn direct_term<T: crate::Real>(model: &HartreeFock<T>, state: &FieldState<T>) -> crate::SpectralField<T> {
    model.direct_term(state)
}

/// The exchange operator of `state` applied to `u`.
pub fn exchange_apply<T: crate::Real>(
    model: &HartreeFock<T>,
    state: &FieldState<T>,
    u: &crate::SpectralField<T>,
) -> crate::Result<crate::SpectralField<T>> {
    model.exchange_apply(state, u)
}

/// One Strang step of size `dt`.
pub fn step_strang<T: crate::Real>(
    model: &HartreeFock<T>,
    state: &FieldState<T>,
    dt: T,
) -> crate::Result<FieldState<T>> {
    model.step_strang(state, dt)
}
