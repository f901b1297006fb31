//! Trajectory norms on the lattice, dispersive decay of the linear group and
//! extraction of scattering states.

mod decay;
mod norms;
mod scattering;

pub use decay::{dispersive_decay_fit, wrap_time, DecayFit};
pub use norms::{
    besov_norm, besov_time_norm, field_besov_norm, mixed_norm, perturbation_states, v_norms, z_norms, NormId,
    NormReport, VNorms, ZNorms,
};
pub use scattering::{extract_at_end, extract_scattering_state, ScatteringReport, ScatteringSummary};
