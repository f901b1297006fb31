use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::galilei::group_in_place;
use super::{ModeTrajectory, VTrajectory};
use crate::dynamics::plane_wave;
use crate::equilibrium::{occupied_modes, DispersionRelation, InteractionPotential, MomentumDistribution, Twiddles};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Offset, MAX_DIM};
use crate::scalar::{cis, czero, lit, Real};

/// How `L₁`/`L₂` are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuhamelPath {
    /// `S(t-τ)` applied to the modulated product.
    Direct,
    /// `e^{iξx - iθ(ξ)t} T_ξ(t-τ)S(t-τ)` applied to the unmodulated source.
    Formula,
}

/// Linearisation of the Hartree-Fock flow around a homogeneous equilibrium.
#[derive(Clone, Debug)]
pub struct ResponseModel<T: Real> {
    pub(crate) grid: Grid<T>,
    /// `(z, c_z)` lattice weights of `w`.
    pub(crate) terms: Vec<(Offset, T)>,
    /// `n(ξ)` on every frequency site.
    pub(crate) occupations: Vec<T>,
    pub(crate) modes: Vec<usize>,
    pub(crate) weights: Vec<T>,
    pub(crate) theta: Vec<T>,
    /// `e^{iξ_k·x}` for each occupied mode.
    waves: Vec<Vec<Complex<T>>>,
    pub(crate) twiddles: Twiddles<T>,
}

#[derive(Clone, Copy)]
enum Source {
    /// `-i (w∗V(·,0)) f`.
    Direct,
    /// `+i Σ_z c_z V(x,z) f(x+z)`.
    Exchange,
}

/// The field a source multiplies: the equilibrium or a stored perturbation.
#[derive(Clone, Copy)]
enum Carrier<'a, T: Real> {
    Equilibrium,
    Fields(&'a ModeTrajectory<T>),
}

impl<T: Real> ResponseModel<T> {
    pub fn new(
        w: &InteractionPotential<T>,
        g: &MomentumDistribution<T>,
        theta: &DispersionRelation<T>,
    ) -> Result<Self> {
        let grid = g.grid();
        if w.grid() != grid || theta.grid() != grid {
            return Err(Error::GridMismatch);
        }
        let modes = occupied_modes(g);
        Ok(Self {
            grid: grid.clone(),
            terms: w.lattice().terms().to_vec(),
            occupations: g.occupations(),
            waves: modes.par_iter().map(|m| plane_wave(grid, m.site).into_data()).collect(),
            modes: modes.iter().map(|m| m.site).collect(),
            weights: modes.iter().map(|m| m.occupation).collect(),
            theta: theta.theta().to_vec(),
            twiddles: Twiddles::new(grid.points()),
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Support of `w` together with the origin, the smallest separation set
    /// the operators read from.
    pub fn required_separations(&self) -> Vec<Offset> {
        let mut out: Vec<Offset> = self.terms.iter().map(|(z, _)| *z).collect();
        out.push([0; MAX_DIM]);
        out.sort();
        out.dedup();
        out
    }

    pub(crate) fn separation_slots(&self, v: &VTrajectory<T>) -> Result<(usize, Vec<usize>)> {
        let missing = |z: &Offset| Error::IncompleteInput(format!("V lacks separation {:?}", &z[..self.grid.dim()]));
        let zero = [0; MAX_DIM];
        let origin = v.separation_index(&zero).ok_or_else(|| missing(&zero))?;
        let slots = self
            .terms
            .iter()
            .map(|(z, _)| v.separation_index(z).ok_or_else(|| missing(z)))
            .collect::<Result<Vec<_>>>()?;
        Ok((origin, slots))
    }

    fn check_grid(&self, v: &VTrajectory<T>) -> Result<()> {
        if v.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `y_k(x, t) = e^{i(ξ_k·x - θ_k t)}`.
    fn equilibrium_field(&self, k: usize, t: T) -> Vec<Complex<T>> {
        let p = cis(-self.theta[self.modes[k]] * t);
        self.waves[k].iter().map(|w| *w * p).collect()
    }

    /// The equilibrium modes sampled on a time grid.
    pub fn equilibrium_modes(&self, dt: T, steps: usize) -> ModeTrajectory<T> {
        let values = (0..self.modes.len())
            .into_par_iter()
            .map(|k| {
                (0..=steps)
                    .map(|n| self.equilibrium_field(k, dt * lit(n as f64)))
                    .collect()
            })
            .collect();
        ModeTrajectory::new(&self.grid, dt, self.modes.clone(), self.weights.clone(), values)
            .expect("consistent shapes")
    }

    /// `S(t_n) f_k(0)` for every mode of `initial`.
    pub fn free_evolution(&self, initial: &ModeTrajectory<T>) -> Result<ModeTrajectory<T>> {
        self.check_modes(initial)?;
        let dt = initial.dt();
        let steps = initial.steps();
        let values = (0..initial.modes().len())
            .into_par_iter()
            .map(|k| {
                (0..=steps)
                    .map(|n| {
                        let mut u = initial.field(k, 0).to_vec();
                        group_in_place(&self.grid, &self.theta, &mut u, dt * lit(n as f64));
                        u
                    })
                    .collect()
            })
            .collect();
        ModeTrajectory::new(&self.grid, dt, self.modes.clone(), self.weights.clone(), values)
    }

    fn check_modes(&self, f: &ModeTrajectory<T>) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if f.modes() != self.modes.as_slice() {
            return Err(Error::Domain("field modes differ from the equilibrium modes".into()));
        }
        Ok(())
    }

    /// `(w∗V(·,0,t_n))(x) = Σ_z c_z V(x-z, 0, t_n)`.
    fn smeared_origin(&self, v: &VTrajectory<T>, origin: usize, n: usize) -> Vec<Complex<T>> {
        let g = &self.grid;
        let row = &v.values()[n][origin];
        (0..g.sites())
            .map(|x| {
                self.terms.iter().fold(czero(), |acc, (z, c)| {
                    let mut m = *z;
                    m.iter_mut().for_each(|q| *q = -*q);
                    acc + row[g.shift(x, &m)] * *c
                })
            })
            .collect()
    }

    fn source(
        &self,
        kind: Source,
        v: &VTrajectory<T>,
        slots: &(usize, Vec<usize>),
        smeared: &[Complex<T>],
        n: usize,
        f: &[Complex<T>],
    ) -> Vec<Complex<T>> {
        let g = &self.grid;
        match kind {
            Source::Direct => {
                let mi = Complex::new(T::zero(), -T::one());
                smeared.iter().zip(f).map(|(a, u)| mi * (*a * *u)).collect()
            }
            Source::Exchange => {
                let pi = Complex::new(T::zero(), T::one());
                let slice = &v.values()[n];
                (0..g.sites())
                    .map(|x| {
                        let acc = self
                            .terms
                            .iter()
                            .zip(&slots.1)
                            .fold(czero(), |acc, ((z, c), s)| acc + (slice[*s][x] * *c) * f[g.shift(x, z)]);
                        pi * acc
                    })
                    .collect()
            }
        }
    }

    /// Trapezoidal Duhamel integral `∫₀^{t_n} S(t_n-τ)G(τ)dτ` per mode, by the
    /// recursion `J_n = S(Δt)J_{n-1} + Δt G_n`.
    fn duhamel_direct(&self, kind: Source, v: &VTrajectory<T>, carrier: Carrier<'_, T>) -> Result<ModeTrajectory<T>> {
        self.check_grid(v)?;
        let slots = self.separation_slots(v)?;
        let dt = v.dt();
        let steps = v.steps();
        if let Carrier::Fields(f) = carrier {
            self.check_modes(f)?;
            if f.steps() != steps || f.dt() != dt {
                return Err(Error::TimeGridMismatch(
                    "field and V trajectories use different time grids".into(),
                ));
            }
        }
        let smeared: Vec<Vec<Complex<T>>> = match kind {
            Source::Direct => (0..=steps)
                .into_par_iter()
                .map(|n| self.smeared_origin(v, slots.0, n))
                .collect(),
            Source::Exchange => Vec::new(),
        };
        let half = dt * lit(0.5);
        let step_phase: Vec<Complex<T>> = self.theta.iter().map(|th| cis(-*th * dt)).collect();
        let values = (0..self.modes.len())
            .into_par_iter()
            .map(|k| {
                let mut j = vec![czero::<T>(); self.grid.sites()];
                let mut out = Vec::with_capacity(steps + 1);
                for n in 0..=steps {
                    let owned;
                    let f: &[Complex<T>] = match carrier {
                        Carrier::Equilibrium => {
                            owned = self.equilibrium_field(k, dt * lit(n as f64));
                            &owned
                        }
                        Carrier::Fields(m) => m.field(k, n),
                    };
                    let empty = Vec::new();
                    let sm = smeared.get(n).unwrap_or(&empty);
                    let src = self.source(kind, v, &slots, sm, n, f);
                    if n == 0 {
                        j.iter_mut().zip(&src).for_each(|(a, s)| *a = *s * half);
                    } else {
                        self.grid.forward_in_place(&mut j);
                        j.iter_mut().zip(&step_phase).for_each(|(a, p)| *a *= *p);
                        self.grid.inverse_in_place(&mut j);
                        j.iter_mut().zip(&src).for_each(|(a, s)| *a += *s * dt);
                    }
                    out.push(j.iter().zip(&src).map(|(a, s)| *a - *s * half).collect());
                }
                out
            })
            .collect();
        ModeTrajectory::new(&self.grid, dt, self.modes.clone(), self.weights.clone(), values)
    }

    /// The same integral with the equilibrium as carrier, evaluated through
    /// the Galilei propagator: the source is left unmodulated, propagated by
    /// `T_ξ S` and modulated by `e^{i(ξ·x - θ(ξ)t)}` at the end.
    fn duhamel_formula(&self, kind: Source, v: &VTrajectory<T>) -> Result<ModeTrajectory<T>> {
        self.check_grid(v)?;
        let slots = self.separation_slots(v)?;
        let g = &self.grid;
        let dt = v.dt();
        let steps = v.steps();
        let half = dt * lit(0.5);
        let to_hat = |mut d: Vec<Complex<T>>| {
            g.forward_in_place(&mut d);
            d
        };
        // Fourier data of the unmodulated sources.
        let (origin_hat, term_hats): (Vec<Vec<Complex<T>>>, Vec<Vec<Vec<Complex<T>>>>) = match kind {
            Source::Direct => (
                (0..=steps)
                    .into_par_iter()
                    .map(|n| to_hat(self.smeared_origin(v, slots.0, n)))
                    .collect(),
                Vec::new(),
            ),
            Source::Exchange => (
                Vec::new(),
                (0..=steps)
                    .into_par_iter()
                    .map(|n| slots.1.iter().map(|s| to_hat(v.values()[n][*s].clone())).collect())
                    .collect(),
            ),
        };
        let values = (0..self.modes.len())
            .into_par_iter()
            .map(|k| {
                let xi = self.modes[k];
                let th_xi = self.theta[xi];
                let mult: Vec<Complex<T>> = (0..g.sites())
                    .map(|eta| cis(-(self.theta[g.add(eta, xi)] - th_xi) * dt))
                    .collect();
                // e^{iξ_k·z} for each support offset.
                let zphase: Vec<Complex<T>> = self
                    .terms
                    .iter()
                    .map(|(z, _)| self.twiddles.phase_neg(g, xi, z).conj())
                    .collect();
                let mut j = vec![czero::<T>(); g.sites()];
                let mut out = Vec::with_capacity(steps + 1);
                for n in 0..=steps {
                    let src: Vec<Complex<T>> = match kind {
                        Source::Direct => {
                            let mi = Complex::new(T::zero(), -T::one());
                            origin_hat[n].iter().map(|a| mi * *a).collect()
                        }
                        Source::Exchange => {
                            let pi = Complex::new(T::zero(), T::one());
                            (0..g.sites())
                                .map(|eta| {
                                    let acc = self
                                        .terms
                                        .iter()
                                        .zip(&zphase)
                                        .zip(&term_hats[n])
                                        .fold(czero(), |acc, (((_, c), p), h)| acc + *p * h[eta] * *c);
                                    pi * acc
                                })
                                .collect()
                        }
                    };
                    if n == 0 {
                        j.iter_mut().zip(&src).for_each(|(a, s)| *a = *s * half);
                    } else {
                        j.iter_mut()
                            .zip(&mult)
                            .zip(&src)
                            .for_each(|((a, m), s)| *a = *a * *m + *s * dt);
                    }
                    let mut field: Vec<Complex<T>> = j.iter().zip(&src).map(|(a, s)| *a - *s * half).collect();
                    g.inverse_in_place(&mut field);
                    let p = cis(-th_xi * dt * lit(n as f64));
                    field.iter_mut().zip(&self.waves[k]).for_each(|(f, w)| *f = *f * *w * p);
                    out.push(field);
                }
                out
            })
            .collect();
        ModeTrajectory::new(&self.grid, dt, self.modes.clone(), self.weights.clone(), values)
    }

    /// `L₁(V) = -i∫₀ᵗ S(t-τ)[(w∗V(·,0,τ))Y]dτ`, one field per equilibrium mode.
    pub fn apply_l1(&self, v: &VTrajectory<T>, path: DuhamelPath) -> Result<ModeTrajectory<T>> {
        match path {
            DuhamelPath::Direct => self.duhamel_direct(Source::Direct, v, Carrier::Equilibrium),
            DuhamelPath::Formula => self.duhamel_formula(Source::Direct, v),
        }
    }

    /// `L₂(V) = i∫₀ᵗ S(t-τ)[Σ_z c_z V(·,z,τ)Y(·+z)]dτ`.
    pub fn apply_l2(&self, v: &VTrajectory<T>, path: DuhamelPath) -> Result<ModeTrajectory<T>> {
        match path {
            DuhamelPath::Direct => self.duhamel_direct(Source::Exchange, v, Carrier::Equilibrium),
            DuhamelPath::Formula => self.duhamel_formula(Source::Exchange, v),
        }
    }

    /// `Q₁(Z, V) = -i∫₀ᵗ S(t-τ)[(w∗V(·,0,τ))Z]dτ`.
    pub fn apply_q1(&self, z: &ModeTrajectory<T>, v: &VTrajectory<T>) -> Result<ModeTrajectory<T>> {
        self.duhamel_direct(Source::Direct, v, Carrier::Fields(z))
    }

    /// `Q₂(Z, V) = i∫₀ᵗ S(t-τ)[Σ_z c_z V(·,z,τ)Z(·+z)]dτ`.
    pub fn apply_q2(&self, z: &ModeTrajectory<T>, v: &VTrajectory<T>) -> Result<ModeTrajectory<T>> {
        self.duhamel_direct(Source::Exchange, v, Carrier::Fields(z))
    }

    /// `E[Ȳ(x+y)F(x)] + E[F̄(x+y)Y(x)]` for a field given per equilibrium
    /// mode; this is how `L₃`, `L₄`, `Q₃`, `Q₄` are built from `L₁`, `L₂`,
    /// `Q₁`, `Q₂`.
    pub fn pair_correlation(&self, f: &ModeTrajectory<T>, separations: &[Offset]) -> Result<VTrajectory<T>> {
        self.check_modes(f)?;
        let g = &self.grid;
        let dt = f.dt();
        let values = (0..=f.steps())
            .into_par_iter()
            .map(|n| {
                let t = dt * lit(n as f64);
                let ys: Vec<Vec<Complex<T>>> = (0..self.modes.len()).map(|k| self.equilibrium_field(k, t)).collect();
                separations
                    .iter()
                    .map(|z| {
                        (0..g.sites())
                            .map(|x| {
                                let xz = g.shift(x, z);
                                ys.iter()
                                    .zip(&self.weights)
                                    .enumerate()
                                    .fold(czero(), |acc, (k, (y, w))| {
                                        let fk = f.field(k, n);
                                        acc + (y[xz].conj() * fk[x] + fk[xz].conj() * y[x]) * *w
                                    })
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        VTrajectory::new(g, dt, separations.to_vec(), values)
    }
}
