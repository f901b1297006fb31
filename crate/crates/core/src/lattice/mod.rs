//! Periodic position/frequency lattices and the Fourier transform pair.
//!
//! The transform is the Riemann-sum analogue of
//! `f̂(ξ) = (2π)^{-d/2} ∫ e^{-ix·ξ} f(x) dx`, so for a box of side `L` sampled
//! at `N` points per axis
//!
//! ```text
//! f̂(ξ_k) = (2π)^{-d/2} Δx^d Σ_j e^{-i x_j·ξ_k} f(x_j)
//! f(x_j)  = (2π)^{-d/2} Δξ^d Σ_k e^{+i x_j·ξ_k} f̂(ξ_k)
//! ```
//!
//! with `Δx = L/N` and `Δξ = 2π/L`. Frequencies use the usual FFT ordering:
//! index `k < N/2` is the mode `k`, index `k ≥ N/2` is the mode `k - N`. The
//! Nyquist mode `-N/2` has no partner under negation and is its own image.

mod derivative;
mod dyadic;

pub use derivative::{multi_indices, spectral_derivative};
pub use dyadic::{dyadic_projector, shell_decomposition};

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{czero, lit, Real};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 4;

/// Per-axis coordinates; only the first `dim` entries are meaningful.
pub type Coord<T> = [T; MAX_DIM];
/// Per-axis signed lattice offsets; only the first `dim` entries are meaningful.
pub type Offset = [isize; MAX_DIM];

/// A periodic box `[0, L)^d` with `N` points per axis.
#[derive(Clone)]
pub struct Grid<T: Real> {
    dim: usize,
    points: usize,
    length: T,
    forward_plan: Arc<dyn Fft<T>>,
    inverse_plan: Arc<dyn Fft<T>>,
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.length == other.length
    }
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .field("length", &self.length)
            .finish()
    }
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, points: usize, length: T) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidGrid(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if points < 2 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension must be a power of two >= 2, got {points}"
            )));
        }
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        if points.checked_pow(dim as u32).is_none_or(|s| s > (1 << 28)) {
            return Err(Error::InvalidGrid("too many lattice sites".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            points,
            length,
            forward_plan: planner.plan_fft_forward(points),
            inverse_plan: planner.plan_fft_inverse(points),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Total number of lattice sites `N^d`.
    pub fn sites(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn dx(&self) -> T {
        self.length / lit(self.points as f64)
    }

    pub fn dxi(&self) -> T {
        T::TAU() / self.length
    }

    /// Position quadrature weight `Δx^d`.
    pub fn cell_volume(&self) -> T {
        self.dx().powi(self.dim as i32)
    }

    /// Frequency quadrature weight `Δξ^d`.
    pub fn dual_cell_volume(&self) -> T {
        self.dxi().powi(self.dim as i32)
    }

    /// Largest lattice frequency magnitude along one axis, `πN/L`.
    pub fn nyquist(&self) -> T {
        lit::<T>(self.points as f64 / 2.0) * self.dxi()
    }

    pub fn unravel(&self, mut idx: usize) -> [usize; MAX_DIM] {
        let mut out = [0usize; MAX_DIM];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn ravel(&self, digits: &[usize]) -> usize {
        digits[..self.dim].iter().fold(0, |acc, &k| acc * self.points + k)
    }

    /// Signed lattice integer of a single axis index.
    #[inline]
    pub fn signed(&self, k: usize) -> isize {
        if k < self.points / 2 {
            k as isize
        } else {
            k as isize - self.points as isize
        }
    }

    pub fn signed_index(&self, idx: usize) -> Offset {
        let digits = self.unravel(idx);
        let mut out = [0isize; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = self.signed(digits[axis]);
        }
        out
    }

    /// Flat index of the lattice point with the given (wrapped) signed offset.
    pub fn index_of_offset(&self, offset: &Offset) -> usize {
        let n = self.points as isize;
        let mut digits = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            digits[axis] = offset[axis].rem_euclid(n) as usize;
        }
        self.ravel(&digits)
    }

    /// Cyclic translation of a flat index by a signed offset.
    #[inline]
    pub fn shift(&self, idx: usize, offset: &Offset) -> usize {
        let n = self.points as isize;
        let digits = self.unravel(idx);
        let mut out = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = (digits[axis] as isize + offset[axis]).rem_euclid(n) as usize;
        }
        self.ravel(&out)
    }

    /// Cyclic sum of two lattice indices (frequency or position).
    pub fn add(&self, a: usize, b: usize) -> usize {
        let da = self.unravel(a);
        let db = self.unravel(b);
        let mut out = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = (da[axis] + db[axis]) % self.points;
        }
        self.ravel(&out)
    }

    /// Cyclic negation of a lattice index; the Nyquist row maps to itself.
    pub fn negate(&self, idx: usize) -> usize {
        let digits = self.unravel(idx);
        let mut out = [0usize; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = (self.points - digits[axis]) % self.points;
        }
        self.ravel(&out)
    }

    pub fn is_nyquist(&self, idx: usize) -> bool {
        let digits = self.unravel(idx);
        digits[..self.dim].contains(&(self.points / 2))
    }

    pub fn wavevector(&self, idx: usize) -> Coord<T> {
        let s = self.signed_index(idx);
        let dxi = self.dxi();
        let mut out = [T::zero(); MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = lit::<T>(s[axis] as f64) * dxi;
        }
        out
    }

    pub fn xi_sq(&self, idx: usize) -> T {
        let xi = self.wavevector(idx);
        xi[..self.dim].iter().fold(T::zero(), |acc, &v| acc + v * v)
    }

    /// Position `x_j = jL/N` in `[0, L)^d`.
    pub fn position(&self, idx: usize) -> Coord<T> {
        let digits = self.unravel(idx);
        let dx = self.dx();
        let mut out = [T::zero(); MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = lit::<T>(digits[axis] as f64) * dx;
        }
        out
    }

    /// Position folded into `[-L/2, L/2)^d`.
    pub fn centered_position(&self, idx: usize) -> Coord<T> {
        let s = self.signed_index(idx);
        let dx = self.dx();
        let mut out = [T::zero(); MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = lit::<T>(s[axis] as f64) * dx;
        }
        out
    }

    pub fn dot(&self, a: &Coord<T>, b: &Coord<T>) -> T {
        (0..self.dim).fold(T::zero(), |acc, i| acc + a[i] * b[i])
    }

    pub fn norm(&self, a: &Coord<T>) -> T {
        self.dot(a, a).sqrt()
    }

    /// All `|ξ|²` values in flat order.
    pub fn xi_sq_table(&self) -> Vec<T> {
        (0..self.sites()).map(|i| self.xi_sq(i)).collect()
    }

    /// In-place position → frequency transform of raw samples.
    pub fn forward_in_place(&self, data: &mut [Complex<T>]) {
        self.fft_axes(data, false);
        let scale = self.cell_volume() / crate::scalar::two_pi_pow_half_d::<T>(self.dim);
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// In-place frequency → position transform of raw samples.
    pub fn inverse_in_place(&self, data: &mut [Complex<T>]) {
        self.fft_axes(data, true);
        let scale = self.dual_cell_volume() / crate::scalar::two_pi_pow_half_d::<T>(self.dim);
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Unnormalised multidimensional DFT (`e^{-i}` forward, `e^{+i}` inverse).
    fn fft_axes(&self, data: &mut [Complex<T>], inverse: bool) {
        assert_eq!(data.len(), self.sites(), "sample count does not match grid");
        let plan = if inverse {
            &self.inverse_plan
        } else {
            &self.forward_plan
        };
        let n = self.points;
        let mut scratch = vec![czero::<T>(); plan.get_inplace_scratch_len()];
        // Last axis is contiguous.
        plan.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }
        let mut line = vec![czero::<T>(); n];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = start + inner;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, value) in line.iter().enumerate() {
                        data[base + k * stride] = *value;
                    }
                }
            }
        }
    }
}

/// Which lattice a [`SpectralField`] is sampled on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Position,
    Frequency,
}

impl Representation {
    fn name(self) -> &'static str {
        match self {
            Representation::Position => "position",
            Representation::Frequency => "frequency",
        }
    }
}

/// Complex samples on one of the two lattices of a [`Grid`].
#[derive(Clone, Debug)]
pub struct SpectralField<T: Real> {
    grid: Grid<T>,
    repr: Representation,
    data: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn new(grid: &Grid<T>, repr: Representation, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != grid.sites() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.sites(),
                data.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            repr,
            data,
        })
    }

    pub fn zeros(grid: &Grid<T>, repr: Representation) -> Self {
        Self {
            grid: grid.clone(),
            repr,
            data: vec![czero(); grid.sites()],
        }
    }

    /// Samples `f` at the centered positions `x ∈ [-L/2, L/2)^d`.
    pub fn from_position_fn(grid: &Grid<T>, f: impl Fn(&Coord<T>) -> Complex<T>) -> Self {
        let data = (0..grid.sites()).map(|i| f(&grid.centered_position(i))).collect();
        Self {
            grid: grid.clone(),
            repr: Representation::Position,
            data,
        }
    }

    /// Samples `f` at the lattice frequencies.
    pub fn from_frequency_fn(grid: &Grid<T>, f: impl Fn(&Coord<T>) -> Complex<T>) -> Self {
        let data = (0..grid.sites()).map(|i| f(&grid.wavevector(i))).collect();
        Self {
            grid: grid.clone(),
            repr: Representation::Frequency,
            data,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex<T>> {
        self.data
    }

    /// Quadrature weight of the lattice this field lives on.
    pub fn weight(&self) -> T {
        match self.repr {
            Representation::Position => self.grid.cell_volume(),
            Representation::Frequency => self.grid.dual_cell_volume(),
        }
    }

    /// `Σ |f|² · weight`.
    pub fn norm_sq(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>() * self.weight()
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    pub fn scale(&mut self, s: Complex<T>) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    /// `self + a·other`, checking grids and representations.
    pub fn axpy(&mut self, a: Complex<T>, other: &Self) -> Result<()> {
        self.check_compatible(other)?;
        self.data.iter_mut().zip(&other.data).for_each(|(y, x)| *y += a * *x);
        Ok(())
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.repr != other.repr {
            return Err(Error::RepresentationMismatch {
                expected: self.repr.name(),
                found: other.repr.name(),
            });
        }
        Ok(())
    }

    fn expect(&self, repr: Representation) -> Result<()> {
        if self.repr != repr {
            return Err(Error::RepresentationMismatch {
                expected: repr.name(),
                found: self.repr.name(),
            });
        }
        Ok(())
    }
}

/// Position → frequency transform with the `(2π)^{-d/2}` convention.
pub fn forward_transform<T: Real>(f: &SpectralField<T>) -> Result<SpectralField<T>> {
    f.expect(Representation::Position)?;
    let mut data = f.data.clone();
    f.grid.forward_in_place(&mut data);
    Ok(SpectralField {
        grid: f.grid.clone(),
        repr: Representation::Frequency,
        data,
    })
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform<T: Real>(f: &SpectralField<T>) -> Result<SpectralField<T>> {
    f.expect(Representation::Frequency)?;
    let mut data = f.data.clone();
    f.grid.inverse_in_place(&mut data);
    Ok(SpectralField {
        grid: f.grid.clone(),
        repr: Representation::Position,
        data,
    })
}

/// Transforms many same-representation fields in parallel.
pub fn transform_batch<T: Real>(fields: &[SpectralField<T>]) -> Result<Vec<SpectralField<T>>> {
    fields
        .par_iter()
        .map(|f| match f.repr {
            Representation::Position => forward_transform(f),
            Representation::Frequency => inverse_transform(f),
        })
        .collect()
}
