use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;

use super::correlation::{correlation_at_offsets, equilibrium_correlation, Twiddles};
use super::{InteractionPotential, MomentumDistribution};
use crate::error::{Error, Result};
use crate::lattice::{Grid, Offset, MAX_DIM};
use crate::scalar::{lit, to_f64, two_pi_pow_half_d, Real};

/// Support sizes up to this are summed directly instead of through an FFT.
const DIRECT_SUPPORT: usize = 64;

/// Tabulated dispersion relation `θ = |ξ|² + θ̃ + θ₀` with its Hessian.
#[derive(Clone, Debug)]
pub struct DispersionRelation<T: Real> {
    grid: Grid<T>,
    theta_tilde: Vec<T>,
    theta0: T,
    theta: Vec<T>,
    hessian: Vec<T>,
    lambda_star: T,
    lambda_site: usize,
    /// `P(z) = c_z K(-z)`: θ̃ is minus the lattice transform of `P`.
    dual: Vec<(Offset, Complex<T>)>,
}

impl<T: Real> DispersionRelation<T> {
    /// `θ = |ξ|²`, the relation for `w = 0`.
    pub fn free(grid: &Grid<T>) -> Self {
        Self::assemble(grid, Vec::new(), T::zero())
    }

    fn assemble(grid: &Grid<T>, dual: Vec<(Offset, Complex<T>)>, theta0: T) -> Self {
        let d = grid.dim();
        let theta_tilde = evaluate_dual(grid, &dual, &[0; MAX_DIM]);
        let theta = (0..grid.sites())
            .map(|i| grid.xi_sq(i) + theta_tilde[i] + theta0)
            .collect();
        let mut hessian = vec![T::zero(); grid.sites() * d * d];
        for a in 0..d {
            for b in a..d {
                let mut alpha = [0usize; MAX_DIM];
                alpha[a] += 1;
                alpha[b] += 1;
                let part = evaluate_dual(grid, &dual, &alpha);
                for (i, v) in part.into_iter().enumerate() {
                    let base = i * d * d;
                    let diag = if a == b { lit::<T>(2.0) } else { T::zero() };
                    hessian[base + a * d + b] = diag + v;
                    hessian[base + b * d + a] = diag + v;
                }
            }
        }
        let mins: Vec<T> = hessian.par_chunks(d * d).map(|h| smallest_eigenvalue(h, d)).collect();
        let (lambda_site, lambda_star) = mins.iter().copied().enumerate().fold(
            (0, T::infinity()),
            |(bi, bv), (i, v)| if v < bv { (i, v) } else { (bi, bv) },
        );
        Self {
            grid: grid.clone(),
            theta_tilde,
            theta0,
            theta,
            hessian,
            lambda_star,
            lambda_site,
            dual,
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn theta_tilde(&self) -> &[T] {
        &self.theta_tilde
    }

    pub fn theta0(&self) -> T {
        self.theta0
    }

    /// Hessian of `θ` at a frequency site, row-major `d×d`.
    pub fn hessian_at(&self, idx: usize) -> &[T] {
        let d = self.grid.dim();
        &self.hessian[idx * d * d..(idx + 1) * d * d]
    }

    /// Minimum over sites of the smallest Hessian eigenvalue.
    pub fn lambda_star(&self) -> T {
        self.lambda_star
    }

    /// Site where [`Self::lambda_star`] is attained.
    pub fn lambda_site(&self) -> usize {
        self.lambda_site
    }

    /// `∂^α θ̃` on the frequency lattice.
    pub fn theta_tilde_derivative(&self, alpha: &[usize; MAX_DIM]) -> Vec<T> {
        evaluate_dual(&self.grid, &self.dual, alpha)
    }

    /// Largest `|∇θ|` over sites in the frequency shell `lo ≤ |ξ| < hi`.
    pub fn max_group_velocity(&self, lo: T, hi: T) -> T {
        let d = self.grid.dim();
        let grads: Vec<Vec<T>> = (0..d)
            .map(|a| {
                let mut alpha = [0usize; MAX_DIM];
                alpha[a] = 1;
                self.theta_tilde_derivative(&alpha)
            })
            .collect();
        let mut best = T::zero();
        for idx in 0..self.grid.sites() {
            let r = self.grid.xi_sq(idx).sqrt();
            if r < lo || r >= hi {
                continue;
            }
            let xi = self.grid.wavevector(idx);
            let mut s = T::zero();
            for a in 0..d {
                let g = lit::<T>(2.0) * xi[a] + grads[a][idx];
                s += g * g;
            }
            best = best.max(s.sqrt());
        }
        best
    }
}

/// `-Re Σ_z P(z)(-iz)^α e^{-iξ·z}` at every frequency site. Odd derivatives
/// along an axis drop the self-conjugate Nyquist offset.
fn evaluate_dual<T: Real>(grid: &Grid<T>, dual: &[(Offset, Complex<T>)], alpha: &[usize; MAX_DIM]) -> Vec<T> {
    let dx = grid.dx();
    let half = (grid.points() / 2) as isize;
    let weighted: Vec<(Offset, Complex<T>)> = dual
        .iter()
        .filter_map(|(z, p)| {
            let mut m = *p;
            for a in 0..grid.dim() {
                if alpha[a] == 0 {
                    continue;
                }
                if alpha[a] % 2 == 1 && z[a] == -half {
                    return None;
                }
                let za = lit::<T>(z[a] as f64) * dx;
                m *= Complex::new(T::zero(), -za).powu(alpha[a] as u32);
            }
            (m != Complex::new(T::zero(), T::zero())).then_some((*z, m))
        })
        .collect();
    if weighted.is_empty() {
        return vec![T::zero(); grid.sites()];
    }
    if weighted.len() <= DIRECT_SUPPORT {
        let tw = Twiddles::new(grid.points());
        (0..grid.sites())
            .into_par_iter()
            .map(|k| {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (z, m) in &weighted {
                    acc += *m * tw.phase_neg(grid, k, z);
                }
                -acc.re
            })
            .collect()
    } else {
        let mut data = vec![Complex::new(T::zero(), T::zero()); grid.sites()];
        for (z, m) in &weighted {
            data[grid.index_of_offset(z)] += *m;
        }
        grid.forward_in_place(&mut data);
        let scale = two_pi_pow_half_d::<T>(grid.dim()) / grid.cell_volume();
        data.into_iter().map(|v| -v.re * scale).collect()
    }
}

fn smallest_eigenvalue<T: Real>(h: &[T], d: usize) -> T {
    if d == 1 {
        return h[0];
    }
    let diagonal = (0..d).all(|a| (0..d).all(|b| a == b || h[a * d + b] == T::zero()));
    if diagonal {
        return (0..d).map(|a| h[a * d + a]).fold(T::infinity(), T::min);
    }
    let m = DMatrix::from_fn(d, d, |a, b| to_f64(h[a * d + b]));
    let min = m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    lit(min)
}

/// Builds `θ̃ = -(2π)^{d/2} ŵ∗g`, `θ₀ = (2π)^d ŵ(0)ĝ(0)` and the Hessian of
/// `θ` on the lattice.
pub fn dispersion_relation<T: Real>(
    w: &InteractionPotential<T>,
    g: &MomentumDistribution<T>,
) -> Result<DispersionRelation<T>> {
    if w.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = g.grid();
    let terms = w.lattice().terms();
    let mass = g.total_mass();
    let theta0 = w.lattice().total() * mass;
    let dual: Vec<(Offset, Complex<T>)> = if terms.len() <= DIRECT_SUPPORT {
        let neg: Vec<Offset> = terms
            .iter()
            .map(|(z, _)| {
                let mut m = *z;
                m.iter_mut().for_each(|v| *v = -*v);
                m
            })
            .collect();
        let k = correlation_at_offsets(g, &neg);
        terms.iter().zip(k).map(|((z, c), kz)| (*z, kz * *c)).collect()
    } else {
        let table = equilibrium_correlation(g);
        terms
            .iter()
            .map(|(z, c)| {
                let mut m = *z;
                m.iter_mut().for_each(|v| *v = -*v);
                (*z, table.at(&m) * *c)
            })
            .collect()
    };
    Ok(DispersionRelation::assemble(grid, dual, theta0))
}
