use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dynamics::{check_separations, CorrelationKernel, FieldState};
use crate::equilibrium::DispersionRelation;
use crate::error::{Error, Result};
use crate::lattice::{Grid, Offset};
use crate::scalar::{czero, lit, to_f64, Real};

/// Relative tolerance when checking that sample times are uniform.
const TIME_TOLERANCE: f64 = 1e-9;

/// Checks `times[n] = n·dt` and returns `dt`.
pub(crate) fn uniform_step<T: Real>(times: &[T]) -> Result<T> {
    if times.len() < 2 {
        return Err(Error::IncompleteInput("a time grid needs at least two samples".into()));
    }
    let dt = times[1] - times[0];
    if to_f64(times[0]).abs() > TIME_TOLERANCE * to_f64(dt).abs() {
        return Err(Error::TimeGridMismatch(format!(
            "grid starts at t = {}, expected 0",
            times[0]
        )));
    }
    for (n, t) in times.iter().enumerate() {
        let expected = dt * lit(n as f64);
        if to_f64((*t - expected).abs()) > TIME_TOLERANCE * to_f64(dt.abs()) * (n as f64).max(1.0) {
            return Err(Error::TimeGridMismatch(format!(
                "sample {n} at t = {t}, expected {expected}"
            )));
        }
    }
    Ok(dt)
}

/// Perturbed correlation `V(x, z, t_n)` on the uniform grid `t_n = n·dt`.
#[derive(Clone, Debug)]
pub struct VTrajectory<T: Real> {
    grid: Grid<T>,
    dt: T,
    separations: Vec<Offset>,
    /// `values[n][s][x]`.
    values: Vec<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> VTrajectory<T> {
    pub fn new(grid: &Grid<T>, dt: T, separations: Vec<Offset>, values: Vec<Vec<Vec<Complex<T>>>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::IncompleteInput("empty V trajectory".into()));
        }
        let ok = values
            .iter()
            .all(|slice| slice.len() == separations.len() && slice.iter().all(|v| v.len() == grid.sites()));
        if !ok {
            return Err(Error::Domain("V values do not match time × separation × site".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            dt,
            separations,
            values,
        })
    }

    pub fn zeros(grid: &Grid<T>, dt: T, steps: usize, separations: Vec<Offset>) -> Self {
        let values = vec![vec![vec![czero(); grid.sites()]; separations.len()]; steps + 1];
        Self {
            grid: grid.clone(),
            dt,
            separations,
            values,
        }
    }

    /// Stacks kernels sampled at `t_n = n·dt`.
    pub fn from_kernels(kernels: &[CorrelationKernel<T>]) -> Result<Self> {
        let first = kernels
            .first()
            .ok_or_else(|| Error::IncompleteInput("no correlation kernels".into()))?;
        let times: Vec<T> = kernels.iter().map(|k| k.time()).collect();
        let dt = uniform_step(&times)?;
        for k in kernels {
            if k.grid() != first.grid() {
                return Err(Error::GridMismatch);
            }
            if k.separations() != first.separations() {
                return Err(Error::Domain("kernels use different separation sets".into()));
            }
        }
        let values = kernels.iter().map(|k| k.values().to_vec()).collect();
        Self::new(first.grid(), dt, first.separations().to_vec(), values)
    }

    /// A random `V` satisfying `V̄(x, z) = V(x+z, -z)`: Gaussian entries of
    /// scale `amplitude`, symmetrised. Deterministic in `seed`.
    pub fn random_hermitian(
        grid: &Grid<T>,
        dt: T,
        steps: usize,
        separations: Vec<Offset>,
        amplitude: T,
        seed: u64,
    ) -> Result<Self> {
        check_separations(grid, &separations)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = Self::zeros(grid, dt, steps, separations);
        for slice in raw.values.iter_mut() {
            for row in slice.iter_mut() {
                for v in row.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *v = Complex::new(lit(re), lit(im)) * amplitude;
                }
            }
        }
        Ok(raw.hermitian_part())
    }

    /// `(V(x, z) + V̄(x+z, -z)) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let pairs = self.mirror_table();
        let g = &self.grid;
        let half = lit::<T>(0.5);
        let values = self
            .values
            .iter()
            .map(|slice| {
                pairs
                    .iter()
                    .enumerate()
                    .map(|(s, &m)| {
                        (0..g.sites())
                            .map(|x| (slice[s][x] + slice[m][g.shift(x, &self.separations[s])].conj()) * half)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            dt: self.dt,
            separations: self.separations.clone(),
            values,
        }
    }

    /// Index of `-z` for each separation `z`.
    fn mirror_table(&self) -> Vec<usize> {
        let g = &self.grid;
        self.separations
            .iter()
            .map(|z| {
                let mut m = *z;
                m.iter_mut().for_each(|v| *v = -*v);
                let target = g.index_of_offset(&m);
                self.separations
                    .iter()
                    .position(|s| g.index_of_offset(s) == target)
                    .expect("separation set is symmetric")
            })
            .collect()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Number of steps; samples run from `n = 0` to `n = steps`.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.values.len()).map(|n| self.dt * lit(n as f64)).collect()
    }

    pub fn separations(&self) -> &[Offset] {
        &self.separations
    }

    /// Position of `z` in the separation list, compared modulo the box.
    pub fn separation_index(&self, z: &Offset) -> Option<usize> {
        let target = self.grid.index_of_offset(z);
        self.separations
            .iter()
            .position(|s| self.grid.index_of_offset(s) == target)
    }

    pub fn values(&self) -> &[Vec<Vec<Complex<T>>>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec<Vec<Complex<T>>>] {
        &mut self.values
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.values.len() != other.values.len() || self.dt != other.dt {
            return Err(Error::TimeGridMismatch(format!(
                "{} samples at dt = {} vs {} at dt = {}",
                self.values.len(),
                self.dt,
                other.values.len(),
                other.dt
            )));
        }
        if self.separations != other.separations {
            return Err(Error::Domain("separation sets differ".into()));
        }
        Ok(())
    }

    /// `self + a·other`.
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            for (r, q) in s.iter_mut().zip(o) {
                for (v, w) in r.iter_mut().zip(q) {
                    *v += *w * a;
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.values
            .iter_mut()
            .flat_map(|s| s.iter_mut())
            .flat_map(|r| r.iter_mut())
            .for_each(|v| *v *= a);
        out
    }

    /// `(Δt Δx^d Σ_n Σ_z Σ_x |V|²)^{1/2}`.
    pub fn norm(&self) -> T {
        let sum: T = self
            .values
            .par_iter()
            .map(|s| {
                s.iter()
                    .flat_map(|r| r.iter())
                    .fold(T::zero(), |acc, v| acc + v.norm_sqr())
            })
            .collect::<Vec<T>>()
            .into_iter()
            .sum();
        (sum * self.dt.abs() * self.grid.cell_volume()).sqrt()
    }

    /// `max_n max_z ‖V(·, z, t_n)‖_{ℓ²}` with lattice weights.
    pub fn sup_norm(&self) -> T {
        let vol = self.grid.cell_volume();
        self.values
            .iter()
            .flat_map(|s| s.iter())
            .map(|r| (r.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()) * vol).sqrt())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .flat_map(|s| s.iter())
            .flat_map(|r| r.iter())
            .fold(T::zero(), |acc, v| acc.max(v.norm()))
    }

    /// `max |V̄(x, z) - V(x+z, -z)|` over all samples.
    pub fn hermitian_defect(&self) -> Result<f64> {
        check_separations(&self.grid, &self.separations)?;
        let pairs = self.mirror_table();
        let g = &self.grid;
        let mut worst = T::zero();
        for slice in &self.values {
            for (s, &m) in pairs.iter().enumerate() {
                for x in 0..g.sites() {
                    let y = g.shift(x, &self.separations[s]);
                    worst = worst.max((slice[s][x].conj() - slice[m][y]).norm());
                }
            }
        }
        Ok(to_f64(worst))
    }

    /// The Fourier form of the same relation,
    /// `max |conj(V̂(η, y)) - V̂(-η, -y) e^{-iη·y}|`, with plain DFT
    /// coefficients.
    pub fn fourier_hermitian_defect(&self) -> Result<f64> {
        check_separations(&self.grid, &self.separations)?;
        let pairs = self.mirror_table();
        let g = &self.grid;
        let tw = crate::equilibrium::Twiddles::new(g.points());
        let mut worst = T::zero();
        for slice in &self.values {
            let hats: Vec<Vec<Complex<T>>> = slice
                .iter()
                .map(|r| {
                    let mut h = r.clone();
                    g.forward_in_place(&mut h);
                    h
                })
                .collect();
            for (s, &m) in pairs.iter().enumerate() {
                for eta in 0..g.sites() {
                    let phase = tw.phase_neg(g, eta, &self.separations[s]);
                    let lhs = hats[s][eta].conj();
                    let rhs = hats[m][g.negate(eta)] * phase;
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        let scale = g.cell_volume() / crate::scalar::two_pi_pow_half_d::<T>(g.dim()) * lit(g.sites() as f64);
        Ok(to_f64(worst / scale))
    }
}

/// A random field sampled on `t_n = n·dt` in orbital form: one field per
/// equilibrium mode, carrying that mode's occupation as its weight.
#[derive(Clone, Debug)]
pub struct ModeTrajectory<T: Real> {
    grid: Grid<T>,
    dt: T,
    modes: Vec<usize>,
    weights: Vec<T>,
    /// `values[k][n][x]`.
    values: Vec<Vec<Vec<Complex<T>>>>,
}

impl<T: Real> ModeTrajectory<T> {
    pub fn new(
        grid: &Grid<T>,
        dt: T,
        modes: Vec<usize>,
        weights: Vec<T>,
        values: Vec<Vec<Vec<Complex<T>>>>,
    ) -> Result<Self> {
        if modes.len() != weights.len() || values.len() != modes.len() {
            return Err(Error::Domain("modes, weights and fields differ in length".into()));
        }
        let steps = values.first().map_or(0, |v| v.len());
        if values
            .iter()
            .any(|v| v.len() != steps || v.iter().any(|f| f.len() != grid.sites()))
        {
            return Err(Error::Domain("mode fields do not match time × site".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            dt,
            modes,
            weights,
            values,
        })
    }

    /// Perturbations `z_k(t_n) = u_k(t_n) - e^{i(ξ_k·x - θ_k t_n)}` of a run
    /// stored at every sample time.
    pub fn perturbations(states: &[FieldState<T>], theta: &DispersionRelation<T>) -> Result<Self> {
        let first = states
            .first()
            .ok_or_else(|| Error::IncompleteInput("no checkpoints".into()))?;
        let times: Vec<T> = states.iter().map(|s| s.time()).collect();
        let dt = uniform_step(&times)?;
        let per_time = states
            .iter()
            .map(|s| {
                if s.modes() != first.modes() || s.weights() != first.weights() {
                    return Err(Error::IncompleteInput("checkpoints disagree on modes".into()));
                }
                s.perturbation(theta)
            })
            .collect::<Result<Vec<_>>>()?;
        let values = (0..first.len())
            .map(|k| per_time.iter().map(|z| z[k].data().to_vec()).collect())
            .collect();
        Self::new(
            first.grid(),
            dt,
            first.modes().to_vec(),
            first.weights().to_vec(),
            values,
        )
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.values.first().map_or(0, |v| v.len().saturating_sub(1))
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn values(&self) -> &[Vec<Vec<Complex<T>>>] {
        &self.values
    }

    pub fn field(&self, k: usize, n: usize) -> &[Complex<T>] {
        &self.values[k][n]
    }

    pub(crate) fn check_shape(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.dt != other.dt || self.steps() != other.steps() {
            return Err(Error::TimeGridMismatch(
                "mode trajectories use different time grids".into(),
            ));
        }
        if self.modes != other.modes {
            return Err(Error::Domain("mode trajectories use different modes".into()));
        }
        Ok(())
    }

    /// `self + a·other`.
    pub fn axpy(&mut self, a: T, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            for (r, q) in s.iter_mut().zip(o) {
                for (v, w) in r.iter_mut().zip(q) {
                    *v += *w * a;
                }
            }
        }
        Ok(())
    }

    pub fn scaled(&self, a: T) -> Self {
        let mut out = self.clone();
        out.values
            .iter_mut()
            .flat_map(|s| s.iter_mut())
            .flat_map(|r| r.iter_mut())
            .for_each(|v| *v *= a);
        out
    }

    /// `(Σ_k n_k ‖f_k(t_n)‖²)^{1/2}` for every sample.
    pub fn norms(&self) -> Vec<T> {
        let vol = self.grid.cell_volume();
        (0..=self.steps())
            .map(|n| {
                let s = self.values.iter().zip(&self.weights).fold(T::zero(), |acc, (f, w)| {
                    acc + *w * f[n].iter().fold(T::zero(), |a, v| a + v.norm_sqr())
                });
                (s * vol).sqrt()
            })
            .collect()
    }

    /// `max_n ‖f(t_n)‖_{L²_ω L²_x}`.
    pub fn sup_norm(&self) -> T {
        self.norms().into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    /// `E[F̄(x+y) F(x)] = Σ_k n_k conj(f_k(x+y)) f_k(x)` on `separations`.
    pub fn self_correlation(&self, separations: &[Offset]) -> VTrajectory<T> {
        let g = &self.grid;
        let values = (0..=self.steps())
            .into_par_iter()
            .map(|n| {
                separations
                    .iter()
                    .map(|z| {
                        (0..g.sites())
                            .map(|x| {
                                let y = g.shift(x, z);
                                self.values
                                    .iter()
                                    .zip(&self.weights)
                                    .fold(czero(), |acc, (f, w)| acc + f[n][y].conj() * f[n][x] * *w)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        VTrajectory {
            grid: g.clone(),
            dt: self.dt,
            separations: separations.to_vec(),
            values,
        }
    }
}
