use num_complex::Complex;

use crate::equilibrium::DispersionRelation;
use crate::error::{Error, Result};
use crate::lattice::{Grid, Representation, SpectralField};
use crate::scalar::{cis, Real};

/// `T_ξ(t)`, the Fourier multiplier `e^{-i(θ(η+ξ) - θ(η) - θ(ξ))t}` for one
/// lattice mode `ξ`. Sums `η + ξ` wrap around the frequency box.
#[derive(Clone, Debug)]
pub struct GalileiPropagator<T: Real> {
    grid: Grid<T>,
    mode: usize,
    /// `θ(η+ξ) - θ(η) - θ(ξ)` per site `η`.
    symbol: Vec<T>,
}

impl<T: Real> GalileiPropagator<T> {
    pub fn new(theta: &DispersionRelation<T>, mode: usize) -> Self {
        let grid = theta.grid();
        let th = theta.theta();
        let symbol = (0..grid.sites())
            .map(|eta| th[grid.add(eta, mode)] - th[eta] - th[mode])
            .collect();
        Self {
            grid: grid.clone(),
            mode,
            symbol,
        }
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn symbol(&self) -> &[T] {
        &self.symbol
    }

    /// The multiplier table at time `t`.
    pub fn multiplier(&self, t: T) -> Vec<Complex<T>> {
        self.symbol.iter().map(|s| cis(-*s * t)).collect()
    }

    /// `T_ξ(t)u` for a position field.
    pub fn apply(&self, u: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if u.representation() != Representation::Position {
            return Err(Error::RepresentationMismatch {
                expected: "position",
                found: "frequency",
            });
        }
        let mut data = u.data().to_vec();
        self.grid.forward_in_place(&mut data);
        for (v, m) in data.iter_mut().zip(self.multiplier(t)) {
            *v *= m;
        }
        self.grid.inverse_in_place(&mut data);
        SpectralField::new(&self.grid, Representation::Position, data)
    }
}

/// `S(t)u = e^{-itθ(D)}u` for a position field.
pub fn linear_group<T: Real>(theta: &DispersionRelation<T>, u: &SpectralField<T>, t: T) -> Result<SpectralField<T>> {
    if u.grid() != theta.grid() {
        return Err(Error::GridMismatch);
    }
    if u.representation() != Representation::Position {
        return Err(Error::RepresentationMismatch {
            expected: "position",
            found: "frequency",
        });
    }
    let mut data = u.data().to_vec();
    group_in_place(theta.grid(), theta.theta(), &mut data, t);
    SpectralField::new(theta.grid(), Representation::Position, data)
}

pub(crate) fn group_in_place<T: Real>(grid: &Grid<T>, theta: &[T], data: &mut [Complex<T>], t: T) {
    grid.forward_in_place(data);
    for (v, th) in data.iter_mut().zip(theta) {
        *v *= cis(-*th * t);
    }
    grid.inverse_in_place(data);
}
