//! Interaction potentials, momentum distributions, the dispersion relation and
//! the Gaussian equilibria built from them.

mod correlation;
mod dispersion;
mod distribution;
mod ensemble;
mod potential;

pub(crate) use correlation::Twiddles;
pub use correlation::{equilibrium_correlation, EquilibriumCorrelation};
pub use dispersion::{dispersion_relation, DispersionRelation};
pub use distribution::{Family, MomentumDistribution, TRUNCATION_TOLERANCE};
pub use ensemble::{gaussian_amplitudes, occupied_modes, sample_equilibrium, EquilibriumEnsemble, Mode};
pub use potential::{InteractionPotential, LatticeInteraction};

/// `ρ C T^{-d/2} / (e^{(|ξ|²-μ)/T} + 1)`, see [`MomentumDistribution::fermi_dirac`].
pub fn fermi_dirac<T: crate::Real>(
    grid: &crate::Grid<T>,
    density: T,
    temperature: T,
    mu: T,
) -> crate::Result<MomentumDistribution<T>> {
    MomentumDistribution::fermi_dirac(grid, density, temperature, mu)
}
