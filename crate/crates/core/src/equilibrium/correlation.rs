use num_complex::Complex;
use rayon::prelude::*;

use super::MomentumDistribution;
use crate::lattice::{Grid, Offset};
use crate::scalar::{two_pi_pow_half_d, Real};

/// `e^{2πim/N}` for `m = 0..N`, so lattice phases `ξ_k·z` can be looked up
/// from the integer product `k·n mod N` without rounding drift.
#[derive(Clone, Debug)]
pub(crate) struct Twiddles<T: Real> {
    n: usize,
    table: Vec<Complex<T>>,
}

impl<T: Real> Twiddles<T> {
    pub(crate) fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|m| {
                let phase = T::TAU() * T::from_usize(m).unwrap() / T::from_usize(n).unwrap();
                Complex::new(phase.cos(), phase.sin())
            })
            .collect();
        Self { n, table }
    }

    /// `e^{-iξ_k·z}` for frequency site `k` and signed offset `z`.
    #[inline]
    pub(crate) fn phase_neg(&self, grid: &Grid<T>, k: usize, z: &Offset) -> Complex<T> {
        let digits = grid.unravel(k);
        let n = self.n as isize;
        let mut m = 0isize;
        for a in 0..grid.dim() {
            m += digits[a] as isize * z[a];
        }
        self.table[(-m).rem_euclid(n) as usize]
    }
}

/// Equilibrium two-point function `K(z) = E[Y(x) Ȳ(x+z)] = Σ_k n_k e^{-iξ_k·z}`,
/// the lattice form of `(2π)^{d/2} ĝ(z)`, tabulated over all separations.
#[derive(Clone, Debug)]
pub struct EquilibriumCorrelation<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> EquilibriumCorrelation<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Values indexed by the position-lattice site of the separation.
    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn at(&self, z: &Offset) -> Complex<T> {
        self.values[self.grid.index_of_offset(z)]
    }
}

/// Tabulates the equilibrium correlation kernel with one FFT.
pub fn equilibrium_correlation<T: Real>(g: &MomentumDistribution<T>) -> EquilibriumCorrelation<T> {
    let grid = g.grid();
    let mut data: Vec<Complex<T>> = g.values().iter().map(|v| Complex::new(*v, T::zero())).collect();
    grid.inverse_in_place(&mut data);
    let scale = two_pi_pow_half_d::<T>(grid.dim());
    // inverse gives Σ n_k e^{+iξz}/(2π)^{d/2}; g is real so K is its conjugate.
    let values = data.into_iter().map(|v| v.conj() * scale).collect();
    EquilibriumCorrelation {
        grid: grid.clone(),
        values,
    }
}

/// `Σ_k n_k e^{-iξ_k·z}` for each requested offset, by direct summation.
pub(crate) fn correlation_at_offsets<T: Real>(g: &MomentumDistribution<T>, offsets: &[Offset]) -> Vec<Complex<T>> {
    let grid = g.grid();
    let tw = Twiddles::new(grid.points());
    let occ = g.occupations();
    offsets
        .par_iter()
        .map(|z| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, n) in occ.iter().enumerate() {
                if *n != T::zero() {
                    acc += tw.phase_neg(grid, k, z) * *n;
                }
            }
            acc
        })
        .collect()
}
