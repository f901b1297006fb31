//! Checks of the stability hypotheses for a homogeneous equilibrium: lattice
//! Sobolev norms of `g` and `θ̃`, uniform ellipticity of `θ`, and the
//! smallness of `‖⟨y⟩w‖_M ‖∇g‖_{W^{2,1}}`.

mod certificate;
mod sobolev;

pub use certificate::{
    critical_regularity, ellipticity_constant, gradient_norm, smallness_lhs, smallness_report, weighted_tv_norm,
    StabilityCertificate, ThresholdMode, Verdict,
};
pub use sobolev::{
    discrete_sobolev_norm, theta_tilde_norm, third_derivative_seminorm, third_derivative_sup, Exponent,
    MAX_SOBOLEV_ORDER,
};
