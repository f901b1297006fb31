//! Spectral derivatives on either lattice.

use num_complex::Complex;

use super::{Grid, Representation, SpectralField, MAX_DIM};
use crate::scalar::Real;

/// Multi-indices `α ∈ ℕ^d` with `|α| = order`, in lexicographic order.
pub fn multi_indices(dim: usize, order: usize) -> Vec<[usize; MAX_DIM]> {
    fn rec(dim: usize, axis: usize, left: usize, cur: &mut [usize; MAX_DIM], out: &mut Vec<[usize; MAX_DIM]>) {
        if axis + 1 == dim {
            cur[axis] = left;
            out.push(*cur);
            return;
        }
        for k in (0..=left).rev() {
            cur[axis] = k;
            rec(dim, axis + 1, left - k, cur, out);
        }
        cur[axis] = 0;
    }
    let mut out = Vec::new();
    rec(dim, 0, order, &mut [0; MAX_DIM], &mut out);
    out
}

/// `∏_a (i·c_a)^{α_a}` where `c` is the dual coordinate; Nyquist rows are
/// dropped along axes differentiated an odd number of times.
fn dual_multiplier<T: Real>(
    grid: &Grid<T>,
    dual: &[T; MAX_DIM],
    digits: &[usize; MAX_DIM],
    alpha: &[usize; MAX_DIM],
    sign: T,
) -> Complex<T> {
    let mut m = Complex::new(T::one(), T::zero());
    for axis in 0..grid.dim() {
        let a = alpha[axis];
        if a == 0 {
            continue;
        }
        if a % 2 == 1 && digits[axis] == grid.points() / 2 {
            return Complex::new(T::zero(), T::zero());
        }
        let factor = Complex::new(T::zero(), sign * dual[axis]);
        m *= factor.powu(a as u32);
    }
    m
}

/// `∂^α f` computed through the dual lattice.
///
/// Position fields are differentiated in `x` by multiplying with `(iξ)^α`;
/// frequency fields are differentiated in `ξ` by multiplying their position
/// representation with `(-ix)^α`.
pub fn spectral_derivative<T: Real>(f: &SpectralField<T>, alpha: &[usize; MAX_DIM]) -> SpectralField<T> {
    if alpha.iter().all(|&a| a == 0) {
        return f.clone();
    }
    let grid = f.grid();
    let mut data = f.data().to_vec();
    match f.representation() {
        Representation::Position => {
            grid.forward_in_place(&mut data);
            for (idx, v) in data.iter_mut().enumerate() {
                let m = dual_multiplier(grid, &grid.wavevector(idx), &grid.unravel(idx), alpha, T::one());
                *v *= m;
            }
            grid.inverse_in_place(&mut data);
        }
        Representation::Frequency => {
            grid.inverse_in_place(&mut data);
            for (idx, v) in data.iter_mut().enumerate() {
                let m = dual_multiplier(grid, &grid.centered_position(idx), &grid.unravel(idx), alpha, -T::one());
                *v *= m;
            }
            grid.forward_in_place(&mut data);
        }
    }
    SpectralField::new(grid, f.representation(), data).expect("same grid")
}
