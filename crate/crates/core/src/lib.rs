//! Periodic spectral solver for the Hartree-Fock equation with exchange in
//! random-field form, together with the tools used to certify stability of
//! its homogeneous equilibria.
//!
//! Every numerical type is generic over the scalar [`Real`] (`f32` or `f64`);
//! the `*64` aliases below fix it to `f64`.

// `!(x > 0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod hypotheses;
pub mod lattice;
pub mod linear_response;
pub mod scalar;

pub use diagnostics::{
    besov_norm, dispersive_decay_fit, extract_scattering_state, mixed_norm, DecayFit, NormReport, ScatteringReport,
};
pub use dynamics::{
    correlation_kernel, evolve, CorrelationKernel, EvolveOptions, FieldState, HartreeFock, Observer, Record, Trajectory,
};
pub use equilibrium::{
    dispersion_relation, equilibrium_correlation, fermi_dirac, sample_equilibrium, DispersionRelation,
    EquilibriumCorrelation, EquilibriumEnsemble, InteractionPotential, MomentumDistribution,
};
pub use error::{Error, Result};
pub use hypotheses::{
    discrete_sobolev_norm, ellipticity_constant, smallness_report, StabilityCertificate, ThresholdMode, Verdict,
};
pub use lattice::{
    dyadic_projector, forward_transform, inverse_transform, multi_indices, shell_decomposition, spectral_derivative,
    transform_batch, Coord, Grid, Offset, Representation, SpectralField, MAX_DIM,
};
pub use linear_response::{
    fixed_point_residual, DuhamelPath, GalileiPropagator, ModeTrajectory, ResponseKind, ResponseModel, VTrajectory,
};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type SpectralField64 = SpectralField<f64>;
pub type InteractionPotential64 = InteractionPotential<f64>;
pub type MomentumDistribution64 = MomentumDistribution<f64>;
pub type DispersionRelation64 = DispersionRelation<f64>;
pub type FieldState64 = FieldState<f64>;
pub type HartreeFock64 = HartreeFock<f64>;
pub type ResponseModel64 = ResponseModel<f64>;
pub type VTrajectory64 = VTrajectory<f64>;
