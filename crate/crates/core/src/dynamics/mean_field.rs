use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FieldState;
use crate::equilibrium::InteractionPotential;
use crate::error::{Error, Result};
use crate::lattice::{Grid, Representation, SpectralField};
use crate::scalar::{lit, Real};

/// Upper bound on stored shift-stencil entries (`|supp w| · N^d`).
const STENCIL_LIMIT: usize = 1 << 22;
/// Support sizes up to this use translated sums for the direct term.
const DIRECT_SHIFT_LIMIT: usize = 64;
/// Cap on Taylor terms for the potential propagator.
const MAX_TAYLOR_TERMS: usize = 64;

/// How the exchange term is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeRoute {
    /// Pick by estimated cost.
    Auto,
    /// Pair kernels `Σ_j n_j u_j(x) ū_j(x-z)` at each support offset `z`.
    Shift,
    /// `Σ_j n_j u_j · w∗(ū_j u)` with one FFT pair per `(i, j)`.
    Fft,
}

/// The Hartree-Fock mean-field model for a fixed interaction.
#[derive(Clone, Debug)]
pub struct HartreeFock<T: Real> {
    grid: Grid<T>,
    /// `(c_z, x ↦ x - z)` for every support offset, when affordable.
    stencil: Option<Vec<(T, Vec<usize>)>>,
    symbol: Vec<T>,
    route: ExchangeRoute,
    sweeps: usize,
}

/// Mean field frozen at one instant: the real direct potential `w∗ρ` and the
/// data that defines the exchange operator.
#[derive(Clone, Debug)]
pub struct FrozenField<T: Real> {
    direct: Vec<T>,
    exchange: Exchange<T>,
}

#[derive(Clone, Debug)]
enum Exchange<T: Real> {
    None,
    /// Pair kernels `K_z(x)` aligned with the model stencil.
    Shift(Vec<Vec<Complex<T>>>),
    /// Frozen copies of the fields and their weights.
    Fft(Vec<Vec<Complex<T>>>, Vec<T>),
}

impl<T: Real> HartreeFock<T> {
    pub fn new(w: &InteractionPotential<T>) -> Self {
        Self::with_route(w, ExchangeRoute::Auto)
    }

    pub fn with_route(w: &InteractionPotential<T>, route: ExchangeRoute) -> Self {
        let grid = w.grid().clone();
        let terms = w.lattice().terms();
        let stencil = (terms.len() * grid.sites() <= STENCIL_LIMIT).then(|| {
            terms
                .iter()
                .map(|(z, c)| {
                    let mut neg = *z;
                    neg.iter_mut().for_each(|v| *v = -*v);
                    (*c, (0..grid.sites()).map(|x| grid.shift(x, &neg)).collect())
                })
                .collect()
        });
        let route = match (route, &stencil) {
            (ExchangeRoute::Shift, None) => ExchangeRoute::Fft,
            (r, _) => r,
        };
        Self {
            symbol: w.lattice().symbol(),
            grid,
            stencil,
            route,
            sweeps: 1,
        }
    }

    /// Number of midpoint fixed-point sweeps in the potential substep.
    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps.max(1);
        self
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    fn support_len(&self) -> usize {
        self.stencil.as_ref().map_or(usize::MAX, |s| s.len())
    }

    fn is_free(&self) -> bool {
        self.stencil.as_ref().is_some_and(|s| s.is_empty())
    }

    /// Route that will be used for `rank` fields.
    pub fn resolved_route(&self, rank: usize) -> ExchangeRoute {
        match self.route {
            ExchangeRoute::Auto => {
                let Some(s) = &self.stencil else {
                    return ExchangeRoute::Fft;
                };
                let n = self.grid.sites() as f64;
                let shift = 2.0 * s.len() as f64 * rank as f64 * n;
                let fft = rank as f64 * rank as f64 * n * (6.0 * n.log2().max(1.0) + 4.0);
                if shift <= fft {
                    ExchangeRoute::Shift
                } else {
                    ExchangeRoute::Fft
                }
            }
            r => r,
        }
    }

    fn convolve(&self, f: &mut [Complex<T>]) {
        self.grid.forward_in_place(f);
        for (v, s) in f.iter_mut().zip(&self.symbol) {
            *v *= *s;
        }
        self.grid.inverse_in_place(f);
    }

    /// `w ∗ ρ` for a real density.
    fn direct_potential(&self, rho: &[T]) -> Vec<T> {
        if self.is_free() {
            return vec![T::zero(); rho.len()];
        }
        if self.support_len() <= DIRECT_SHIFT_LIMIT {
            let stencil = self.stencil.as_ref().expect("small support has a stencil");
            (0..rho.len())
                .into_par_iter()
                .map(|x| stencil.iter().fold(T::zero(), |acc, (c, tab)| acc + *c * rho[tab[x]]))
                .collect()
        } else {
            let mut f: Vec<Complex<T>> = rho.iter().map(|r| Complex::new(*r, T::zero())).collect();
            self.convolve(&mut f);
            f.into_iter().map(|v| v.re).collect()
        }
    }

    /// Freezes the mean field of a state.
    pub fn freeze(&self, state: &FieldState<T>) -> FrozenField<T> {
        let direct = self.direct_potential(&state.density());
        let exchange = if self.is_free() || state.is_empty() {
            Exchange::None
        } else {
            match self.resolved_route(state.len()) {
                ExchangeRoute::Shift => {
                    let stencil = self.stencil.as_ref().expect("shift route has a stencil");
                    let fields = state.fields();
                    let weights = state.weights();
                    let kernels = stencil
                        .iter()
                        .map(|(_, tab)| {
                            (0..self.grid.sites())
                                .into_par_iter()
                                .map(|x| {
                                    let mut acc = Complex::new(T::zero(), T::zero());
                                    for (u, n) in fields.iter().zip(weights) {
                                        acc += u.data()[x] * u.data()[tab[x]].conj() * *n;
                                    }
                                    acc
                                })
                                .collect()
                        })
                        .collect();
                    Exchange::Shift(kernels)
                }
                _ => Exchange::Fft(
                    state.fields().iter().map(|u| u.data().to_vec()).collect(),
                    state.weights().to_vec(),
                ),
            }
        };
        FrozenField { direct, exchange }
    }

    /// Exchange operator of a frozen field applied to `u`.
    fn exchange_frozen(&self, frozen: &FrozenField<T>, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let zero = Complex::new(T::zero(), T::zero());
        match &frozen.exchange {
            Exchange::None => vec![zero; u.len()],
            Exchange::Shift(kernels) => {
                let stencil = self.stencil.as_ref().expect("shift route has a stencil");
                (0..u.len())
                    .into_par_iter()
                    .map(|x| {
                        let mut acc = zero;
                        for ((c, tab), k) in stencil.iter().zip(kernels) {
                            acc += k[x] * u[tab[x]] * *c;
                        }
                        acc
                    })
                    .collect()
            }
            Exchange::Fft(fields, weights) => {
                let mut acc = vec![zero; u.len()];
                let mut buf = vec![zero; u.len()];
                for (f, n) in fields.iter().zip(weights) {
                    for ((b, fv), uv) in buf.iter_mut().zip(f).zip(u) {
                        *b = fv.conj() * *uv;
                    }
                    self.convolve(&mut buf);
                    for ((a, fv), b) in acc.iter_mut().zip(f).zip(&buf) {
                        *a += *fv * *b * *n;
                    }
                }
                acc
            }
        }
    }

    /// `H u = (w∗ρ)u - Ex(u)` with the mean field frozen.
    pub fn apply_hamiltonian(&self, frozen: &FrozenField<T>, u: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = self.exchange_frozen(frozen, u);
        for ((o, d), v) in out.iter_mut().zip(&frozen.direct).zip(u) {
            *o = *v * *d - *o;
        }
        out
    }

    /// `e^{-i dt H} u` by its Taylor series, run until the next term falls
    /// below machine precision. `None` if the series does not settle.
    pub fn propagate_frozen(&self, frozen: &FrozenField<T>, u: &[Complex<T>], dt: T) -> Option<Vec<Complex<T>>> {
        let mut out = u.to_vec();
        let mut term = u.to_vec();
        let eps = T::epsilon();
        for n in 1..=MAX_TAYLOR_TERMS {
            let h = self.apply_hamiltonian(frozen, &term);
            let f = Complex::new(T::zero(), -dt / lit(n as f64));
            let mut tmax = T::zero();
            for ((t, hv), o) in term.iter_mut().zip(&h).zip(out.iter_mut()) {
                *t = *hv * f;
                *o += *t;
                tmax = tmax.max(t.norm());
            }
            if !tmax.is_finite() {
                return None;
            }
            let omax = out.iter().fold(T::zero(), |acc, v| acc.max(v.norm()));
            if tmax <= eps * omax || tmax == T::zero() {
                return Some(out);
            }
        }
        None
    }

    /// `w ∗ ρ` as a position field.
    pub fn direct_term(&self, state: &FieldState<T>) -> SpectralField<T> {
        let d = self.direct_potential(&state.density());
        let data = d.into_iter().map(|v| Complex::new(v, T::zero())).collect();
        SpectralField::new(&self.grid, Representation::Position, data).expect("one value per site")
    }

    /// `Σ_j n_j u_j(x)[w ∗ (ū_j u)](x)`.
    pub fn exchange_apply(&self, state: &FieldState<T>, u: &SpectralField<T>) -> Result<SpectralField<T>> {
        if u.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if u.representation() != Representation::Position {
            return Err(Error::RepresentationMismatch {
                expected: "position",
                found: "frequency",
            });
        }
        let frozen = self.freeze(state);
        let data = self.exchange_frozen(&frozen, u.data());
        SpectralField::new(&self.grid, Representation::Position, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{gaussian_bump, plane_wave, Backend};
    use crate::equilibrium::{dispersion_relation, MomentumDistribution};

    fn random_state(grid: &Grid<f64>, seed: u64) -> FieldState<f64> {
        let g = MomentumDistribution::gaussian(grid, 1.0, 1.2).unwrap();
        let bump = gaussian_bump(grid, [0.3; 4], 1.0, [0.7, -0.2, 0.0, 0.0]);
        let orb = FieldState::perturbed(&g, &bump, 0.4).unwrap();
        FieldState::monte_carlo(&orb, 5, seed).unwrap()
    }

    #[test]
    fn free_model_has_no_mean_field() {
        let grid = Grid::<f64>::new(1, 16, 6.0).unwrap();
        let hf = HartreeFock::new(&InteractionPotential::zero(&grid));
        let s = random_state(&grid, 1);
        assert_eq!(hf.direct_term(&s).max_abs(), 0.0);
        assert_eq!(hf.exchange_apply(&s, &s.fields()[0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn delta_direct_and_exchange_coincide() {
        let grid = Grid::<f64>::new(1, 32, 8.0).unwrap();
        let hf = HartreeFock::new(&InteractionPotential::point(&grid, 1.7));
        let s = random_state(&grid, 2);
        let rho = s.density();
        let d = hf.direct_term(&s);
        for x in 0..grid.sites() {
            assert!((d.data()[x].re - 1.7 * rho[x]).abs() < 1e-13);
        }
        let u = &s.fields()[1];
        let ex = hf.exchange_apply(&s, u).unwrap();
        for x in 0..grid.sites() {
            assert!((ex.data()[x] - u.data()[x] * rho[x] * 1.7).norm() < 1e-12);
        }
    }

    #[test]
    fn single_orbital_delta_gives_modulus_squared() {
        let grid = Grid::<f64>::new(1, 16, 4.0).unwrap();
        let u = gaussian_bump(&grid, [0.0; 4], 0.5, [1.0, 0.0, 0.0, 0.0]);
        let s = FieldState::new(&grid, 0.0, vec![u.clone()], vec![1.0], vec![], Backend::Orbital).unwrap();
        let hf = HartreeFock::new(&InteractionPotential::point(&grid, 1.0));
        let d = hf.direct_term(&s);
        for x in 0..grid.sites() {
            assert!((d.data()[x].re - u.data()[x].norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn shift_and_fft_routes_agree() {
        let grid = Grid::<f64>::new(2, 8, 6.0).unwrap();
        let s = random_state(&grid, 3);
        for w in [
            InteractionPotential::symmetric_pair(&grid, [1.5, -0.75, 0.0, 0.0], 0.8).unwrap(),
            InteractionPotential::gaussian(&grid, 0.5, 1.0).unwrap(),
        ] {
            let a = HartreeFock::with_route(&w, ExchangeRoute::Shift);
            let b = HartreeFock::with_route(&w, ExchangeRoute::Fft);
            for u in s.fields() {
                let ea = a.exchange_apply(&s, u).unwrap();
                let eb = b.exchange_apply(&s, u).unwrap();
                for (x, y) in ea.data().iter().zip(eb.data()) {
                    assert!((x - y).norm() < 1e-12);
                }
            }
            let (da, db) = (a.direct_term(&s), b.direct_term(&s));
            for (x, y) in da.data().iter().zip(db.data()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn exchange_matches_naive_double_sum() {
        let grid = Grid::<f64>::new(1, 16, 6.0).unwrap();
        let s = random_state(&grid, 4);
        let w = InteractionPotential::symmetric_pair(&grid, [0.75, 0.0, 0.0, 0.0], 0.6).unwrap();
        let hf = HartreeFock::new(&w);
        let u = &s.fields()[0];
        let ex = hf.exchange_apply(&s, u).unwrap();
        for x in 0..grid.sites() {
            let mut acc = Complex::new(0.0, 0.0);
            for (z, c) in w.lattice().terms() {
                let y = grid.shift(x, &[-z[0], 0, 0, 0]);
                for (uj, n) in s.fields().iter().zip(s.weights()) {
                    acc += uj.data()[x] * uj.data()[y].conj() * u.data()[y] * c * n;
                }
            }
            assert!((acc - ex.data()[x]).norm() < 1e-13);
        }
    }

    #[test]
    fn equilibrium_mean_field_matches_dispersion() {
        let grid = Grid::<f64>::new(1, 32, 10.0).unwrap();
        let g = MomentumDistribution::gaussian(&grid, 0.8, 1.0).unwrap();
        let w = InteractionPotential::symmetric_pair(&grid, [1.25, 0.0, 0.0, 0.0], 0.9).unwrap();
        let th = dispersion_relation(&w, &g).unwrap();
        let s = FieldState::equilibrium(&g);
        let hf = HartreeFock::new(&w);
        let d = hf.direct_term(&s);
        for v in d.data() {
            assert!((v.re - th.theta0()).abs() < 1e-13);
        }
        let frozen = hf.freeze(&s);
        for site in [0, 3, 17] {
            let u = plane_wave(&grid, site);
            let hu = hf.apply_hamiltonian(&frozen, u.data());
            let e = th.theta0() + th.theta_tilde()[site];
            for (a, b) in hu.iter().zip(u.data()) {
                assert!((a - b * e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn taylor_propagator_is_unitary_and_fails_loudly() {
        let grid = Grid::<f64>::new(1, 32, 8.0).unwrap();
        let w = InteractionPotential::gaussian(&grid, 2.0, 0.7).unwrap();
        let hf = HartreeFock::new(&w);
        let s = random_state(&grid, 5);
        let frozen = hf.freeze(&s);
        let u = s.fields()[0].data();
        let v = hf.propagate_frozen(&frozen, u, 0.01).unwrap();
        let n0: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let n1: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!(((n1 - n0) / n0).abs() < 1e-13);
        assert!(hf.propagate_frozen(&frozen, u, 1e6).is_none());
    }
}
