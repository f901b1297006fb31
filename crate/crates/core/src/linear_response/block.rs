use std::collections::HashMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ResponseModel, VTrajectory};
use crate::error::{Error, Result};
use crate::lattice::{Offset, MAX_DIM};
use crate::scalar::{cis, czero, lit, to_f64, Real};

/// Relative tolerance on the power-iteration eigenvalue estimate.
const POWER_TOLERANCE: f64 = 1e-8;
const POWER_MAX_ITERATIONS: usize = 10_000;
/// Neumann terms are added until one falls below this fraction of `‖rhs‖`.
const NEUMANN_INCREMENT: f64 = 1e-10;
/// Certified bound on `‖(1 - L₃ - L₄)V - rhs‖ / ‖rhs‖`.
const NEUMANN_RESIDUAL: f64 = 1e-8;
const NEUMANN_MAX_TERMS: usize = 10_000;

/// Which part of the correlation response a block represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    L3,
    L4,
    Sum,
}

/// One lag kernel: output separation, input separation, values per lag.
#[derive(Clone, Debug)]
struct LagKernel<T: Real> {
    out: usize,
    input: usize,
    lags: Vec<Complex<T>>,
}

/// The response operator restricted to one spatial frequency `ζ`.
///
/// It acts on the stacked vector `V̂(ζ, z_s, t_n)` laid out as
/// `n·(#separations) + s`, with the trapezoidal time quadrature built in.
#[derive(Clone, Debug)]
pub struct ResponseBlock<T: Real> {
    zeta: usize,
    kind: ResponseKind,
    dt: T,
    steps: usize,
    width: usize,
    kernels: Vec<LagKernel<T>>,
}

/// Per-frequency block norms and their maximum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub kind: ResponseKind,
    pub blocks: Vec<BlockNorm>,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockNorm {
    pub zeta: usize,
    pub frequency: Vec<f64>,
    pub norm: f64,
}

/// Output of [`ResponseModel::invert_response`].
#[derive(Clone, Debug)]
pub struct NeumannSolution<T: Real> {
    pub solution: VTrajectory<T>,
    /// Number of summands `(L₃+L₄)^k rhs` including `k = 0`.
    pub terms: usize,
    /// `‖(1 - L₃ - L₄)V - rhs‖ / ‖rhs‖`, recomputed from the solution.
    pub residual: f64,
    pub norm: f64,
}

impl<T: Real> ResponseBlock<T> {
    pub fn zeta(&self) -> usize {
        self.zeta
    }

    pub fn kind(&self) -> ResponseKind {
        self.kind
    }

    /// Length of the stacked vector.
    pub fn dimension(&self) -> usize {
        self.width * (self.steps + 1)
    }

    pub fn is_zero(&self) -> bool {
        self.kernels.is_empty()
    }

    fn weight(&self, n: usize, m: usize) -> T {
        if m == 0 || m == n {
            self.dt * lit(0.5)
        } else {
            self.dt
        }
    }

    pub fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        let w = self.width;
        let mut out = vec![czero(); self.dimension()];
        for k in &self.kernels {
            for n in 1..=self.steps {
                let mut acc = czero();
                for m in 0..=n {
                    acc += k.lags[n - m] * x[m * w + k.input] * self.weight(n, m);
                }
                out[n * w + k.out] += acc;
            }
        }
        out
    }

    pub fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>> {
        let w = self.width;
        let mut out = vec![czero(); self.dimension()];
        for k in &self.kernels {
            for m in 0..=self.steps {
                let mut acc = czero();
                for n in m.max(1)..=self.steps {
                    acc += k.lags[n - m].conj() * y[n * w + k.out] * self.weight(n, m);
                }
                out[m * w + k.input] += acc;
            }
        }
        out
    }

    /// Dense row-major matrix of the block.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let d = self.dimension();
        let mut mat = vec![czero(); d * d];
        let mut e = vec![czero(); d];
        for col in 0..d {
            e[col] = Complex::new(T::one(), T::zero());
            for (row, v) in self.apply(&e).into_iter().enumerate() {
                mat[row * d + col] = v;
            }
            e[col] = czero();
        }
        mat
    }

    /// Spectral norm by power iteration on `AᴴA`.
    pub fn norm(&self) -> Result<T> {
        if self.is_zero() {
            return Ok(T::zero());
        }
        let d = self.dimension();
        let mut v: Vec<Complex<T>> = (0..d)
            .map(|i| Complex::new(T::one() / lit((1 + i % 7) as f64), lit((i % 5) as f64 / 5.0)))
            .collect();
        normalise(&mut v);
        let mut previous = T::zero();
        for _ in 0..POWER_MAX_ITERATIONS {
            let av = self.apply(&v);
            let mu = sq_norm(&av);
            let mut u = self.apply_adjoint(&av);
            if sq_norm(&u) == T::zero() {
                return Ok(mu.sqrt());
            }
            normalise(&mut u);
            v = u;
            if (mu - previous).abs() <= lit::<T>(POWER_TOLERANCE) * mu {
                return Ok(mu.sqrt());
            }
            previous = mu;
        }
        Err(Error::NumericalDegeneracy {
            iterations: POWER_MAX_ITERATIONS,
        })
    }
}

fn sq_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |a, x| a + x.norm_sqr())
}

fn normalise<T: Real>(v: &mut [Complex<T>]) {
    let n = sq_norm(v).sqrt();
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

impl<T: Real> ResponseModel<T> {
    /// `ĉ(ζ) = Σ_z c_z e^{-iζ·z}`, summed directly so a point mass at the
    /// origin gives its weight exactly.
    fn symbol_at(&self, zeta: usize) -> T {
        self.terms.iter().fold(T::zero(), |acc, (z, c)| {
            acc + self.twiddles.phase_neg(&self.grid, zeta, z).re * *c
        })
    }

    /// The block of `L₃`, `L₄` or their sum at frequency site `ζ`.
    ///
    /// With `D(ξ) = n(ξ+ζ) - n(ξ)`, `Δθ = θ(ξ+ζ) - θ(ξ)` and
    /// `B(u, s) = i Σ_ξ D(ξ) e^{iξ·u} e^{-iΔθ s}`:
    ///
    /// ```text
    /// L̂₃(y, t) = ĉ(ζ) ∫₀ᵗ B(-y, t-τ) V̂(0, τ) dτ
    /// L̂₄(y, t) = -Σ_z c_z ∫₀ᵗ B(z-y, t-τ) V̂(z, τ) dτ
    /// ```
    pub fn assemble_response_block(
        &self,
        zeta: usize,
        kind: ResponseKind,
        dt: T,
        steps: usize,
        separations: &[Offset],
    ) -> Result<ResponseBlock<T>> {
        let probe = VTrajectory::zeros(&self.grid, dt, 0, separations.to_vec());
        let (origin, slots) = self.separation_slots(&probe)?;
        let g = &self.grid;
        let active: Vec<(usize, T, T)> = (0..g.sites())
            .filter_map(|xi| {
                let s = g.add(xi, zeta);
                let d = self.occupations[s] - self.occupations[xi];
                (d != T::zero()).then(|| (xi, d, self.theta[s] - self.theta[xi]))
            })
            .collect();
        let mut block = ResponseBlock {
            zeta,
            kind,
            dt,
            steps,
            width: separations.len(),
            kernels: Vec::new(),
        };
        if active.is_empty() {
            return Ok(block);
        }
        let phases: Vec<Vec<Complex<T>>> = active
            .iter()
            .map(|(_, _, dth)| (0..=steps).map(|j| cis(-*dth * dt * lit(j as f64))).collect())
            .collect();
        let mut cache: HashMap<usize, Vec<Complex<T>>> = HashMap::new();
        let mut b_of = |u: Offset| -> Vec<Complex<T>> {
            cache
                .entry(g.index_of_offset(&u))
                .or_insert_with(|| {
                    let mut out = vec![czero(); steps + 1];
                    for ((xi, d, _), ph) in active.iter().zip(&phases) {
                        let e = self.twiddles.phase_neg(g, *xi, &u).conj() * *d;
                        for (o, p) in out.iter_mut().zip(ph) {
                            *o += e * *p;
                        }
                    }
                    let i = Complex::new(T::zero(), T::one());
                    out.iter_mut().for_each(|o| *o = i * *o);
                    out
                })
                .clone()
        };
        let mut acc: HashMap<(usize, usize), Vec<Complex<T>>> = HashMap::new();
        let mut add = |out: usize, input: usize, coef: T, b: Vec<Complex<T>>| {
            let slot = acc.entry((out, input)).or_insert_with(|| vec![czero(); steps + 1]);
            for (s, v) in slot.iter_mut().zip(b) {
                *s += v * coef;
            }
        };
        for (a, y) in separations.iter().enumerate() {
            let diff = |z: &Offset| {
                let mut u = [0isize; MAX_DIM];
                for k in 0..MAX_DIM {
                    u[k] = z[k] - y[k];
                }
                u
            };
            if kind != ResponseKind::L4 {
                let c_hat = self.symbol_at(zeta);
                if c_hat != T::zero() {
                    add(a, origin, c_hat, b_of(diff(&[0; MAX_DIM])));
                }
            }
            if kind != ResponseKind::L3 {
                for ((z, c), s) in self.terms.iter().zip(&slots) {
                    add(a, *s, -*c, b_of(diff(z)));
                }
            }
        }
        let mut kernels: Vec<LagKernel<T>> = acc
            .into_iter()
            .filter(|(_, lags)| lags.iter().any(|v| *v != czero()))
            .map(|((out, input), lags)| LagKernel { out, input, lags })
            .collect();
        kernels.sort_by_key(|k| (k.out, k.input));
        block.kernels = kernels;
        Ok(block)
    }

    fn all_blocks(
        &self,
        kind: ResponseKind,
        dt: T,
        steps: usize,
        separations: &[Offset],
    ) -> Result<Vec<ResponseBlock<T>>> {
        (0..self.grid.sites())
            .into_par_iter()
            .map(|zeta| self.assemble_response_block(zeta, kind, dt, steps, separations))
            .collect()
    }

    fn block_norms(&self, blocks: &[ResponseBlock<T>], kind: ResponseKind) -> Result<OperatorNorm> {
        let norms = blocks.par_iter().map(|b| b.norm()).collect::<Result<Vec<T>>>()?;
        let d = self.grid.dim();
        let blocks: Vec<BlockNorm> = blocks
            .iter()
            .zip(norms)
            .map(|(b, n)| BlockNorm {
                zeta: b.zeta,
                frequency: self.grid.wavevector(b.zeta)[..d].iter().map(|v| to_f64(*v)).collect(),
                norm: to_f64(n),
            })
            .collect();
        let norm = blocks.iter().fold(0.0f64, |a, b| a.max(b.norm));
        Ok(OperatorNorm { kind, blocks, norm })
    }

    /// Operator norm of `L₃`, `L₄` or `L₃+L₄` on trajectories sampled at
    /// `t_n = n·dt`, as the largest block norm over `ζ`.
    pub fn response_operator_norm(
        &self,
        kind: ResponseKind,
        dt: T,
        steps: usize,
        separations: &[Offset],
    ) -> Result<OperatorNorm> {
        let blocks = self.all_blocks(kind, dt, steps, separations)?;
        self.block_norms(&blocks, kind)
    }

    /// `V̂[ζ]` as stacked vectors, one per frequency site.
    fn gather(&self, v: &VTrajectory<T>) -> Vec<Vec<Complex<T>>> {
        let g = &self.grid;
        let width = v.separations().len();
        let hats: Vec<Vec<Vec<Complex<T>>>> = v
            .values()
            .par_iter()
            .map(|slice| {
                slice
                    .iter()
                    .map(|row| {
                        let mut h = row.clone();
                        g.forward_in_place(&mut h);
                        h
                    })
                    .collect()
            })
            .collect();
        (0..g.sites())
            .map(|zeta| {
                let mut x = Vec::with_capacity(width * hats.len());
                for slice in &hats {
                    for row in slice {
                        x.push(row[zeta]);
                    }
                }
                x
            })
            .collect()
    }

    fn scatter(&self, like: &VTrajectory<T>, per_zeta: &[Vec<Complex<T>>]) -> VTrajectory<T> {
        let g = &self.grid;
        let width = like.separations().len();
        let values = (0..=like.steps())
            .into_par_iter()
            .map(|n| {
                (0..width)
                    .map(|s| {
                        let mut row: Vec<Complex<T>> = per_zeta.iter().map(|x| x[n * width + s]).collect();
                        g.inverse_in_place(&mut row);
                        row
                    })
                    .collect()
            })
            .collect();
        VTrajectory::new(g, like.dt(), like.separations().to_vec(), values).expect("shape preserved")
    }

    fn apply_blocks(&self, blocks: &[ResponseBlock<T>], x: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
        blocks
            .par_iter()
            .zip(x)
            .map(|(b, xz)| {
                if b.is_zero() {
                    vec![czero(); xz.len()]
                } else {
                    b.apply(xz)
                }
            })
            .collect()
    }

    /// `L₃(V)`, `L₄(V)` or their sum, by per-frequency blocks.
    pub fn apply_response(&self, v: &VTrajectory<T>, kind: ResponseKind) -> Result<VTrajectory<T>> {
        if v.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let blocks = self.all_blocks(kind, v.dt(), v.steps(), v.separations())?;
        let out = self.apply_blocks(&blocks, &self.gather(v));
        Ok(self.scatter(v, &out))
    }

    pub fn apply_l3(&self, v: &VTrajectory<T>) -> Result<VTrajectory<T>> {
        self.apply_response(v, ResponseKind::L3)
    }

    pub fn apply_l4(&self, v: &VTrajectory<T>) -> Result<VTrajectory<T>> {
        self.apply_response(v, ResponseKind::L4)
    }

    /// Solves `(1 - L₃ - L₄)V = rhs` by the Neumann series, after checking
    /// that the operator norm is below one.
    pub fn invert_response(&self, rhs: &VTrajectory<T>) -> Result<NeumannSolution<T>> {
        if rhs.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let blocks = self.all_blocks(ResponseKind::Sum, rhs.dt(), rhs.steps(), rhs.separations())?;
        let norm = self.block_norms(&blocks, ResponseKind::Sum)?.norm;
        if norm >= 1.0 {
            return Err(Error::InvertibilityNotCertified { norm });
        }
        let x = self.gather(rhs);
        let rhs_norm = x.iter().map(|v| sq_norm(v)).fold(T::zero(), |a, b| a + b).sqrt();
        if rhs_norm == T::zero() {
            return Ok(NeumannSolution {
                solution: rhs.clone(),
                terms: 0,
                residual: 0.0,
                norm,
            });
        }
        let mut sum = x.clone();
        let mut term = x;
        let mut terms = 1;
        loop {
            term = self.apply_blocks(&blocks, &term);
            let inc = term.iter().map(|v| sq_norm(v)).fold(T::zero(), |a, b| a + b).sqrt();
            for (s, t) in sum.iter_mut().zip(&term) {
                s.iter_mut().zip(t).for_each(|(a, b)| *a += *b);
            }
            terms += 1;
            if inc <= lit::<T>(NEUMANN_INCREMENT) * rhs_norm {
                break;
            }
            if terms >= NEUMANN_MAX_TERMS {
                return Err(Error::NeumannStalled {
                    terms,
                    residual: to_f64(inc / rhs_norm),
                });
            }
        }
        let solution = self.scatter(rhs, &sum);
        let mut check = solution.clone();
        check.axpy(
            -T::one(),
            &self.scatter(rhs, &self.apply_blocks(&blocks, &self.gather(&solution))),
        )?;
        check.axpy(-T::one(), rhs)?;
        let residual = to_f64(check.norm() / rhs.norm());
        if !(residual < NEUMANN_RESIDUAL) {
            return Err(Error::NeumannStalled { terms, residual });
        }
        Ok(NeumannSolution {
            solution,
            terms,
            residual,
            norm,
        })
    }
}
