use std::ops::RangeInclusive;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::equilibrium::DispersionRelation;
use crate::error::{Error, Result};
use crate::lattice::{multi_indices, spectral_derivative, Representation, SpectralField, MAX_DIM};
use crate::scalar::{lit, Real};

/// Highest derivative order accepted by [`discrete_sobolev_norm`].
pub const MAX_SOBOLEV_ORDER: usize = 4;

/// Lebesgue exponent of a lattice norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    One,
    Two,
    Infinity,
}

impl Exponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Exponent::One)
        } else if p == 2.0 {
            Ok(Exponent::Two)
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::UnsupportedExponent(format!("p = {p} (supported: 1, 2, inf)")))
        }
    }
}

/// `ℓ^p` norm of lattice samples with quadrature weight `weight` (ignored
/// for `p = ∞`).
pub(crate) fn lattice_lp<T: Real>(values: impl Iterator<Item = T>, weight: T, p: Exponent) -> T {
    match p {
        Exponent::One => values.map(|v| v.abs()).sum::<T>() * weight,
        Exponent::Two => (values.map(|v| v * v).sum::<T>() * weight).sqrt(),
        Exponent::Infinity => values.fold(T::zero(), |a, v| a.max(v.abs())),
    }
}

/// `Σ_{|α| ∈ orders} ‖∂^α(⟨·⟩^weight f)‖_{ℓ^p}`, without an order limit.
pub(crate) fn derivative_sum<T: Real>(
    f: &SpectralField<T>,
    orders: RangeInclusive<usize>,
    p: Exponent,
    weight: i32,
) -> T {
    let grid = f.grid();
    let mut base = f.clone();
    if weight != 0 {
        let repr = f.representation();
        for (idx, v) in base.data_mut().iter_mut().enumerate() {
            let c = match repr {
                Representation::Frequency => grid.wavevector(idx),
                Representation::Position => grid.centered_position(idx),
            };
            *v *= (T::one() + grid.dot(&c, &c)).sqrt().powi(weight);
        }
    }
    let q = base.weight();
    let mut total = T::zero();
    for order in orders {
        for alpha in multi_indices(grid.dim(), order) {
            let d = spectral_derivative(&base, &alpha);
            total += lattice_lp(d.data().iter().map(|v: &Complex<T>| v.norm()), q, p);
        }
    }
    total
}

/// `‖⟨·⟩^weight f‖_{W^{k,p}}`: the sum over `|α| ≤ k` of `ℓ^p` norms of spectral
/// derivatives, with the quadrature weight of the lattice `f` lives on.
///
/// The weight is `⟨ξ⟩` for frequency fields and `⟨x⟩` (centred) for position
/// fields, applied before differentiating.
pub fn discrete_sobolev_norm<T: Real>(f: &SpectralField<T>, order: usize, p: Exponent, weight: i32) -> Result<T> {
    if order > MAX_SOBOLEV_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_SOBOLEV_ORDER,
        });
    }
    Ok(derivative_sum(f, 0..=order, p, weight))
}

/// `Σ_{|α| ≤ k} ‖∂^α θ̃‖_{ℓ^p}` on the frequency lattice, from the exact
/// dual-lattice sum (any order).
pub fn theta_tilde_norm<T: Real>(theta: &DispersionRelation<T>, order: usize, p: Exponent) -> T {
    let grid = theta.grid();
    let mut total = T::zero();
    for k in 0..=order {
        for alpha in multi_indices(grid.dim(), k) {
            let d = theta.theta_tilde_derivative(&alpha);
            total += lattice_lp(d.into_iter(), grid.dual_cell_volume(), p);
        }
    }
    total
}

fn multinomial(alpha: &[usize; MAX_DIM]) -> usize {
    let fact = |n: usize| (1..=n).product::<usize>();
    fact(alpha.iter().sum()) / alpha.iter().map(|&a| fact(a)).product::<usize>()
}

/// `sup_ξ |∇^{⊗3}θ̃(ξ)|` with the Frobenius norm of the full tensor.
pub fn third_derivative_sup<T: Real>(theta: &DispersionRelation<T>) -> T {
    let grid = theta.grid();
    let mut acc = vec![T::zero(); grid.sites()];
    for alpha in multi_indices(grid.dim(), 3) {
        let m = lit::<T>(multinomial(&alpha) as f64);
        for (a, v) in acc.iter_mut().zip(theta.theta_tilde_derivative(&alpha)) {
            *a += m * v * v;
        }
    }
    acc.into_iter().fold(T::zero(), |a, v| a.max(v.sqrt()))
}

/// `Σ_{|α| = 3} ‖∂^α θ̃‖_∞`, the `Ẇ^{3,∞}` seminorm.
pub fn third_derivative_seminorm<T: Real>(theta: &DispersionRelation<T>) -> T {
    let grid = theta.grid();
    multi_indices(grid.dim(), 3)
        .iter()
        .map(|alpha| {
            lattice_lp(
                theta.theta_tilde_derivative(alpha).into_iter(),
                T::one(),
                Exponent::Infinity,
            )
        })
        .sum()
}
