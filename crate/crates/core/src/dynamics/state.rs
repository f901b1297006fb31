use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{gaussian_amplitudes, occupied_modes, DispersionRelation, MomentumDistribution, Twiddles};
use crate::error::{Error, Result};
use crate::lattice::{Coord, Grid, Offset, Representation, SpectralField};
use crate::scalar::{lit, Real};

/// How the expectation `E` over the random field is realised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// `X = Σ_j √n_j a_j u_j` with exact expectations over the amplitudes.
    Orbital,
    /// `M` sampled realizations with weight `1/M` each.
    MonteCarlo { seed: u64 },
}

/// A finite-rank representation of the random field: fields `u_j` with
/// weights `n_j` so that `E[X(x) X̄(y)] = Σ_j n_j u_j(x) ū_j(y)`.
#[derive(Clone, Debug)]
pub struct FieldState<T: Real> {
    grid: Grid<T>,
    time: T,
    fields: Vec<SpectralField<T>>,
    weights: Vec<T>,
    modes: Vec<usize>,
    backend: Backend,
}

/// `e^{iξ_k·x}` on the position lattice using exact integer phases.
pub fn plane_wave<T: Real>(grid: &Grid<T>, site: usize) -> SpectralField<T> {
    let tw = Twiddles::new(grid.points());
    let k: Offset = grid.signed_index(site);
    let mut neg = k;
    neg.iter_mut().for_each(|v| *v = -*v);
    let data = (0..grid.sites()).map(|j| tw.phase_neg(grid, j, &neg)).collect();
    SpectralField::new(grid, Representation::Position, data).expect("one value per site")
}

/// `e^{-|x-c|²/(2s²)} e^{iκ·x}`, periodised by evaluating at the nearest image.
pub fn gaussian_bump<T: Real>(grid: &Grid<T>, center: Coord<T>, width: T, momentum: Coord<T>) -> SpectralField<T> {
    let len = grid.length();
    let half = len / lit(2.0);
    let two = lit::<T>(2.0);
    SpectralField::from_position_fn(grid, |x| {
        let mut r2 = T::zero();
        let mut ph = T::zero();
        for a in 0..grid.dim() {
            let mut d = x[a] - center[a];
            while d >= half {
                d -= len;
            }
            while d < -half {
                d += len;
            }
            r2 += d * d;
            ph += momentum[a] * x[a];
        }
        let amp = (-r2 / (two * width * width)).exp();
        Complex::new(amp * ph.cos(), amp * ph.sin())
    })
}

impl<T: Real> FieldState<T> {
    pub fn new(
        grid: &Grid<T>,
        time: T,
        fields: Vec<SpectralField<T>>,
        weights: Vec<T>,
        modes: Vec<usize>,
        backend: Backend,
    ) -> Result<Self> {
        if fields.len() != weights.len() {
            return Err(Error::Domain(format!(
                "{} fields but {} weights",
                fields.len(),
                weights.len()
            )));
        }
        if !modes.is_empty() && modes.len() != fields.len() {
            return Err(Error::Domain("reference modes must match the field count".into()));
        }
        for f in &fields {
            if f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if f.representation() != Representation::Position {
                return Err(Error::RepresentationMismatch {
                    expected: "position",
                    found: "frequency",
                });
            }
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::Domain("weights must be nonnegative".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            time,
            fields,
            weights,
            modes,
            backend,
        })
    }

    /// Plane-wave orbitals `e^{iξ_k·x}` with occupations `n_k`: the equilibrium
    /// `Y` at `t = 0`.
    pub fn equilibrium(g: &MomentumDistribution<T>) -> Self {
        let grid = g.grid();
        let modes = occupied_modes(g);
        let fields = modes.par_iter().map(|m| plane_wave(grid, m.site)).collect();
        Self {
            grid: grid.clone(),
            time: T::zero(),
            fields,
            weights: modes.iter().map(|m| m.occupation).collect(),
            modes: modes.iter().map(|m| m.site).collect(),
            backend: Backend::Orbital,
        }
    }

    /// `u_k = e^{iξ_k·x}(1 + cφ)` with `c` chosen so that
    /// `Σ_k n_k ‖z_k‖² = ε²` for `z_k = cφe^{iξ_k·x}`.
    pub fn perturbed(g: &MomentumDistribution<T>, profile: &SpectralField<T>, epsilon: T) -> Result<Self> {
        let mut state = Self::equilibrium(g);
        if profile.grid() != g.grid() {
            return Err(Error::GridMismatch);
        }
        let mass = g.total_mass();
        let norm = profile.norm();
        if mass == T::zero() || norm == T::zero() {
            return Ok(state);
        }
        let c = epsilon / (mass.sqrt() * norm);
        let p = profile.data();
        state.fields.par_iter_mut().for_each(|u| {
            for (v, phi) in u.data_mut().iter_mut().zip(p) {
                *v += *v * *phi * c;
            }
        });
        Ok(state)
    }

    /// Samples `M` realizations `X^m = Σ_j √n_j a_j^m u_j` of an orbital state.
    pub fn monte_carlo(orbitals: &FieldState<T>, realizations: usize, seed: u64) -> Result<Self> {
        if orbitals.backend != Backend::Orbital {
            return Err(Error::Domain(
                "Monte Carlo ensembles are drawn from an orbital state".into(),
            ));
        }
        if realizations == 0 {
            return Err(Error::Domain("ensemble needs at least one realization".into()));
        }
        let grid = &orbitals.grid;
        let roots: Vec<T> = orbitals.weights.iter().map(|n| n.sqrt()).collect();
        let fields = (0..realizations)
            .into_par_iter()
            .map(|m| {
                let amps = gaussian_amplitudes::<T>(seed, m as u64, orbitals.fields.len());
                let mut x = vec![Complex::new(T::zero(), T::zero()); grid.sites()];
                for ((u, a), r) in orbitals.fields.iter().zip(amps).zip(&roots) {
                    let c = a * *r;
                    for (xv, uv) in x.iter_mut().zip(u.data()) {
                        *xv += c * *uv;
                    }
                }
                SpectralField::new(grid, Representation::Position, x).expect("one value per site")
            })
            .collect();
        let w = T::one() / lit::<T>(realizations as f64);
        Ok(Self {
            grid: grid.clone(),
            time: orbitals.time,
            fields,
            weights: vec![w; realizations],
            modes: Vec::new(),
            backend: Backend::MonteCarlo { seed },
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub(crate) fn set_time(&mut self, t: T) {
        self.time = t;
    }

    pub fn fields(&self) -> &[SpectralField<T>] {
        &self.fields
    }

    pub(crate) fn fields_mut(&mut self) -> &mut [SpectralField<T>] {
        &mut self.fields
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Frequency site of the equilibrium mode each orbital started from;
    /// empty for Monte Carlo states.
    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// `ρ(x) = Σ_j n_j |u_j(x)|²`.
    pub fn density(&self) -> Vec<T> {
        (0..self.grid.sites())
            .into_par_iter()
            .map(|x| {
                let mut acc = T::zero();
                for (u, n) in self.fields.iter().zip(&self.weights) {
                    acc += *n * u.data()[x].norm_sqr();
                }
                acc
            })
            .collect()
    }

    /// `Δx^d Σ_j n_j Σ_x |u_j|²`.
    pub fn total_mass(&self) -> T {
        let per: Vec<T> = self.fields.par_iter().map(|u| u.norm_sq()).collect();
        per.iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (m, n)| acc + *m * *n)
    }

    /// Gram matrix `⟨u_i, u_j⟩` with lattice weights, row-major.
    pub fn gram(&self) -> Vec<Complex<T>> {
        let r = self.fields.len();
        let vol = self.grid.cell_volume();
        let rows: Vec<Vec<Complex<T>>> = (0..r)
            .into_par_iter()
            .map(|i| {
                (0..r)
                    .map(|j| {
                        let s: Complex<T> = self.fields[i]
                            .data()
                            .iter()
                            .zip(self.fields[j].data())
                            .map(|(a, b)| a.conj() * *b)
                            .sum();
                        s * vol
                    })
                    .collect()
            })
            .collect();
        rows.concat()
    }

    /// Cyclic translation `u_j(x) ↦ u_j(x - s)` of every field.
    pub fn translated(&self, shift: &Offset) -> Self {
        let mut out = self.clone();
        let mut neg = *shift;
        neg.iter_mut().for_each(|v| *v = -*v);
        let table: Vec<usize> = (0..self.grid.sites()).map(|x| self.grid.shift(x, &neg)).collect();
        for (dst, src) in out.fields.iter_mut().zip(&self.fields) {
            for (x, v) in dst.data_mut().iter_mut().enumerate() {
                *v = src.data()[table[x]];
            }
        }
        out
    }

    /// `z_k = u_k - e^{i(ξ_k·x - θ_k t)}` for each orbital.
    pub fn perturbation(&self, theta: &DispersionRelation<T>) -> Result<Vec<SpectralField<T>>> {
        if self.backend != Backend::Orbital || self.modes.len() != self.fields.len() {
            return Err(Error::IncompleteInput(
                "perturbation needs orbitals with reference modes".into(),
            ));
        }
        Ok(self
            .fields
            .par_iter()
            .zip(&self.modes)
            .map(|(u, &site)| {
                let mut z = u.clone();
                let p = -theta.theta()[site] * self.time;
                let phase = Complex::new(p.cos(), p.sin());
                let y = plane_wave(&self.grid, site);
                for (zv, yv) in z.data_mut().iter_mut().zip(y.data()) {
                    *zv -= *yv * phase;
                }
                z
            })
            .collect())
    }

    /// `(Σ_k n_k ‖z_k‖²)^{1/2}`, the `L²_ω L²_x` size of the perturbation.
    pub fn perturbation_norm(&self, theta: &DispersionRelation<T>) -> Result<T> {
        let z = self.perturbation(theta)?;
        Ok(z.iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (f, n)| acc + f.norm_sq() * *n)
            .sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_wave_is_exact() {
        let grid = Grid::<f64>::new(2, 8, 5.0).unwrap();
        let site = grid.ravel(&[3, 6]);
        let u = plane_wave(&grid, site);
        let xi = grid.wavevector(site);
        for j in 0..grid.sites() {
            let x = grid.position(j);
            let ph = xi[0] * x[0] + xi[1] * x[1];
            assert!((u.data()[j] - Complex::new(ph.cos(), ph.sin())).norm() < 1e-13);
        }
    }

    #[test]
    fn equilibrium_density_is_total_mass() {
        let grid = Grid::<f64>::new(1, 32, 10.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 0.7, 1.0).unwrap();
        let s = FieldState::equilibrium(&g);
        for r in s.density() {
            assert!((r - 0.7).abs() < 1e-12);
        }
        assert!((s.total_mass() - 0.7 * 10.0).abs() < 1e-11);
    }

    #[test]
    fn perturbation_has_requested_size() {
        let grid = Grid::<f64>::new(1, 32, 10.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 0.7, 1.0).unwrap();
        let bump = gaussian_bump(&grid, [0.0; 4], 1.0, [0.5, 0.0, 0.0, 0.0]);
        let s = FieldState::perturbed(&g, &bump, 1e-3).unwrap();
        let th = DispersionRelation::free(&grid);
        assert!((s.perturbation_norm(&th).unwrap() - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_density_tracks_orbitals() {
        let grid = Grid::<f64>::new(1, 16, 6.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 1.0, 1.0).unwrap();
        let bump = gaussian_bump(&grid, [0.0; 4], 0.8, [0.0; 4]);
        let orb = FieldState::perturbed(&g, &bump, 0.3).unwrap();
        let m = 4096;
        let mc = FieldState::monte_carlo(&orb, m, 7).unwrap();
        let (a, b) = (orb.density(), mc.density());
        for (x, y) in a.iter().zip(&b) {
            // |X|² has standard deviation ρ for a circular Gaussian.
            assert!((x - y).abs() < 5.0 * x / (m as f64).sqrt());
        }
    }
}
