use num_complex::Complex;
use rayon::prelude::*;

use super::{FieldState, FrozenField, HartreeFock};
use crate::error::{Error, Result};
use crate::lattice::{Grid, SpectralField};
use crate::scalar::{to_f64, Real};

/// Applies the exact free multiplier `e^{-iτ|ξ|²}` to every field.
pub fn kinetic_flow<T: Real>(state: &mut FieldState<T>, tau: T) {
    let grid = state.grid().clone();
    let mult = kinetic_multiplier(&grid, tau);
    state.fields_mut().par_iter_mut().for_each(|u| {
        let data = u.data_mut();
        grid.forward_in_place(data);
        for (v, m) in data.iter_mut().zip(&mult) {
            *v *= *m;
        }
        grid.inverse_in_place(data);
    });
}

fn kinetic_multiplier<T: Real>(grid: &Grid<T>, tau: T) -> Vec<Complex<T>> {
    (0..grid.sites())
        .map(|k| {
            let p = -tau * grid.xi_sq(k);
            Complex::new(p.cos(), p.sin())
        })
        .collect()
}

impl<T: Real> HartreeFock<T> {
    fn propagate_all(&self, frozen: &FrozenField<T>, state: &FieldState<T>, dt: T) -> Result<Vec<SpectralField<T>>> {
        let out: Option<Vec<Vec<Complex<T>>>> = state
            .fields()
            .par_iter()
            .map(|u| self.propagate_frozen(frozen, u.data(), dt))
            .collect();
        let out = out.ok_or(Error::BlowUp {
            last_good_time: to_f64(state.time()),
        })?;
        Ok(out
            .into_iter()
            .map(|d| SpectralField::new(state.grid(), crate::Representation::Position, d).expect("same grid"))
            .collect())
    }

    /// Potential substep: `i∂_t u = (w∗ρ)u - Ex(u)` over `dt` with the mean
    /// field frozen at the midpoint predicted by `sweeps` half steps.
    pub fn potential_step(&self, state: &FieldState<T>, dt: T) -> Result<FieldState<T>> {
        let half = dt / (T::one() + T::one());
        let mut frozen = self.freeze(state);
        for _ in 0..self.sweeps() {
            let mut mid = state.clone();
            mid.fields_mut()
                .clone_from_slice(&self.propagate_all(&frozen, state, half)?);
            frozen = self.freeze(&mid);
        }
        let mut next = state.clone();
        next.fields_mut()
            .clone_from_slice(&self.propagate_all(&frozen, state, dt)?);
        Ok(next)
    }

    /// One Strang step: half kinetic, full potential, half kinetic. `dt` may be
    /// negative to run backwards.
    pub fn step_strang(&self, state: &FieldState<T>, dt: T) -> Result<FieldState<T>> {
        let half = dt / (T::one() + T::one());
        let mut s = state.clone();
        kinetic_flow(&mut s, half);
        let mut s = self.potential_step(&s, dt)?;
        kinetic_flow(&mut s, half);
        s.set_time(state.time() + dt);
        let finite = s
            .fields()
            .par_iter()
            .all(|u| u.data().iter().all(|v| v.re.is_finite() && v.im.is_finite()));
        if !finite {
            return Err(Error::BlowUp {
                last_good_time: to_f64(state.time()),
            });
        }
        Ok(s)
    }
}
