use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{DispersionRelation, MomentumDistribution};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Representation, SpectralField};
use crate::scalar::{lit, two_pi_pow_half_d, Real};

/// One occupied equilibrium mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T: Real> {
    /// Frequency-lattice site of `ξ_k`.
    pub site: usize,
    /// `n_k = g(ξ_k)Δξ^d`.
    pub occupation: T,
}

/// A seeded Monte Carlo ensemble of the Gaussian equilibrium
/// `Y = Σ_k √n_k a_k e^{i(ξ_k·x - θ(ξ_k)t)}`.
///
/// Amplitudes of realization `m` come from ChaCha stream `m` of the seed, so
/// any subset of realizations is reproducible independently of the others.
#[derive(Clone, Debug)]
pub struct EquilibriumEnsemble<T: Real> {
    grid: Grid<T>,
    modes: Vec<Mode<T>>,
    realizations: usize,
    seed: u64,
}

/// Occupied modes of `g`, in site order.
pub fn occupied_modes<T: Real>(g: &MomentumDistribution<T>) -> Vec<Mode<T>> {
    g.occupations()
        .into_iter()
        .enumerate()
        .filter(|(_, n)| *n > T::zero())
        .map(|(site, occupation)| Mode { site, occupation })
        .collect()
}

/// Draws an `M`-member ensemble from `g`.
pub fn sample_equilibrium<T: Real>(
    g: &MomentumDistribution<T>,
    realizations: usize,
    seed: u64,
) -> Result<EquilibriumEnsemble<T>> {
    if realizations == 0 {
        return Err(Error::Domain("ensemble needs at least one realization".into()));
    }
    Ok(EquilibriumEnsemble {
        grid: g.grid().clone(),
        modes: occupied_modes(g),
        realizations,
        seed,
    })
}

/// Circular complex Gaussian amplitudes with `E|a|² = 1` for one realization.
pub fn gaussian_amplitudes<T: Real>(seed: u64, stream: u64, count: usize) -> Vec<Complex<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex::new(lit(re * s), lit(im * s))
        })
        .collect()
}

impl<T: Real> EquilibriumEnsemble<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.realizations
    }

    pub fn is_empty(&self) -> bool {
        self.realizations == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Amplitudes `a_k^{(m)}`, one per occupied mode.
    pub fn amplitudes(&self, m: usize) -> Vec<Complex<T>> {
        gaussian_amplitudes(self.seed, m as u64, self.modes.len())
    }

    /// Realization `m` at time `t` on the position lattice. `θ` may be omitted
    /// at `t = 0`.
    pub fn realization(&self, m: usize, t: T, theta: Option<&DispersionRelation<T>>) -> SpectralField<T> {
        let grid = &self.grid;
        let amps = self.amplitudes(m);
        let mut data = vec![Complex::new(T::zero(), T::zero()); grid.sites()];
        // An inverse transform of c_k·(2π)^{d/2}/Δξ^d yields Σ_k c_k e^{iξ_k·x}.
        let scale = two_pi_pow_half_d::<T>(grid.dim()) / grid.dual_cell_volume();
        for (mode, a) in self.modes.iter().zip(amps) {
            let phase = match theta {
                Some(th) if t != T::zero() => {
                    let p = -th.theta()[mode.site] * t;
                    Complex::new(p.cos(), p.sin())
                }
                _ => Complex::new(T::one(), T::zero()),
            };
            data[mode.site] = a * phase * mode.occupation.sqrt() * scale;
        }
        grid.inverse_in_place(&mut data);
        SpectralField::new(grid, Representation::Position, data).expect("one value per site")
    }

    /// Sample estimate of `E[Y(x₀) Ȳ(x₀+z)]` at `x₀ = 0`, for every separation
    /// `z`, averaged over the first `count` realizations in a fixed order.
    pub fn empirical_correlation(&self, count: usize) -> Vec<Complex<T>> {
        let count = count.min(self.realizations);
        let per: Vec<Vec<Complex<T>>> = (0..count)
            .into_par_iter()
            .map(|m| {
                let y = self.realization(m, T::zero(), None);
                let y0 = y.data()[0];
                y.data().iter().map(|v| y0 * v.conj()).collect()
            })
            .collect();
        let mut acc = vec![Complex::new(T::zero(), T::zero()); self.grid.sites()];
        for row in &per {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += *v;
            }
        }
        let inv = T::one() / lit::<T>(count as f64);
        acc.into_iter().map(|v| v * inv).collect()
    }
}
