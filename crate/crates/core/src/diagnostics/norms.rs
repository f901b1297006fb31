use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::FieldState;
use crate::equilibrium::DispersionRelation;
use crate::error::{Error, Result};
use crate::lattice::{Grid, Representation, SpectralField};
use crate::linear_response::VTrajectory;
use crate::scalar::{lit, to_f64, Real};

/// Serialises `±∞` as the strings `"inf"`/`"-inf"` so exponents survive JSON.
pub(crate) mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// Which norm a [`NormReport`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormId {
    /// `L^p_t W^{s,q}_x L²_ω`.
    Mixed {
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        q: f64,
        s: f64,
    },
    /// `L^p_t B_q^{s_low, s_high} L²_ω`.
    Besov {
        #[serde(with = "extended")]
        p: f64,
        #[serde(with = "extended")]
        q: f64,
        s_low: f64,
        s_high: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub norm: NormId,
    pub value: f64,
    pub dim: usize,
    pub points: usize,
    pub length: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Spatial norm at each sample time.
    pub times: Vec<f64>,
    pub per_time: Vec<f64>,
}

fn check_exponent(name: &str, v: f64) -> Result<()> {
    if v >= 1.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent(format!("{name} = {v} (must be >= 1)")))
    }
}

/// `(Σ_x ρ(x)^q Δx^d)^{1/q}`, or the maximum for `q = ∞`.
pub(crate) fn spatial_lq<T: Real>(rho: &[T], cell: T, q: f64) -> T {
    if q.is_infinite() {
        return rho.iter().fold(T::zero(), |a, v| a.max(*v));
    }
    if q == 2.0 {
        return (rho.iter().map(|v| *v * *v).sum::<T>() * cell).sqrt();
    }
    let qt = lit::<T>(q);
    (rho.iter().map(|v| v.powf(qt)).sum::<T>() * cell).powf(T::one() / qt)
}

/// Trapezoid weights on sample times.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

/// `(∫ a(t)^p dt)^{1/p}` by the trapezoid rule, or `max a` for `p = ∞`. A
/// single sample is returned as is.
pub(crate) fn time_lp(times: &[f64], values: &[f64], p: f64) -> f64 {
    if p.is_infinite() || values.len() == 1 {
        return values.iter().fold(0.0, |a, v| a.max(*v));
    }
    let w = trapezoid_weights(times);
    w.iter()
        .zip(values)
        .map(|(w, v)| w * v.powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

fn check_series<T: Real>(states: &[FieldState<T>]) -> Result<(Grid<T>, Vec<f64>)> {
    let first = states
        .first()
        .ok_or_else(|| Error::IncompleteInput("norm of an empty trajectory".into()))?;
    let grid = first.grid().clone();
    let times: Vec<f64> = states.iter().map(|s| to_f64(s.time())).collect();
    for (s, pair) in states
        .iter()
        .zip(times.windows(2).map(Some).chain(std::iter::once(None)))
    {
        if s.grid() != &grid {
            return Err(Error::GridMismatch);
        }
        if let Some(p) = pair {
            if !(p[1] > p[0]) {
                return Err(Error::TimeGridMismatch(format!(
                    "sample times must increase ({} then {})",
                    p[0], p[1]
                )));
            }
        }
    }
    Ok((grid, times))
}

fn report<T: Real>(norm: NormId, grid: &Grid<T>, times: Vec<f64>, per_time: Vec<f64>, p: f64) -> NormReport {
    NormReport {
        norm,
        value: time_lp(&times, &per_time, p),
        dim: grid.dim(),
        points: grid.points(),
        length: to_f64(grid.length()),
        t_start: times[0],
        t_end: *times.last().expect("non-empty"),
        times,
        per_time,
    }
}

/// `√(Σ_k n_k |u_k(x)|²)` from position samples.
fn omega_layer<T: Real>(fields: &[Vec<Complex<T>>], weights: &[T]) -> Vec<T> {
    let sites = fields.first().map_or(0, |f| f.len());
    let mut rho = vec![T::zero(); sites];
    for (f, n) in fields.iter().zip(weights) {
        for (r, v) in rho.iter_mut().zip(f) {
            *r += *n * v.norm_sqr();
        }
    }
    rho.into_iter().map(|v| v.sqrt()).collect()
}

fn position_data<T: Real>(f: &SpectralField<T>) -> Vec<Complex<T>> {
    let mut data = f.data().to_vec();
    if f.representation() == Representation::Frequency {
        f.grid().inverse_in_place(&mut data);
    }
    data
}

fn frequency_data<T: Real>(f: &SpectralField<T>) -> Vec<Complex<T>> {
    let mut data = f.data().to_vec();
    if f.representation() == Representation::Position {
        f.grid().forward_in_place(&mut data);
    }
    data
}

/// `‖⟨∇⟩^s u‖_{L^q_x L²_ω}` of one state.
fn state_sobolev<T: Real>(state: &FieldState<T>, q: f64, s: f64) -> T {
    let grid = state.grid();
    let fields: Vec<Vec<Complex<T>>> = state
        .fields()
        .par_iter()
        .map(|f| {
            if s == 0.0 {
                return position_data(f);
            }
            let mut h = frequency_data(f);
            let half = lit::<T>(0.5 * s);
            for (idx, v) in h.iter_mut().enumerate() {
                *v *= (T::one() + grid.xi_sq(idx)).powf(half);
            }
            grid.inverse_in_place(&mut h);
            h
        })
        .collect();
    spatial_lq(&omega_layer(&fields, state.weights()), grid.cell_volume(), q)
}

/// `‖u‖_{L^p_t W^{s,q}_x L²_ω}` over the sample times of `states`.
///
/// The `ω` layer is `√(Σ_k n_k|u_k|²)` with the state weights, exact for the
/// orbital backend. Time integrals use the trapezoid rule on the sample times.
pub fn mixed_norm<T: Real>(states: &[FieldState<T>], p: f64, q: f64, s: f64) -> Result<NormReport> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let (grid, times) = check_series(states)?;
    let per_time = states.par_iter().map(|st| to_f64(state_sobolev(st, q, s))).collect();
    Ok(report(NormId::Mixed { p, q, s }, &grid, times, per_time, p))
}

/// `(Σ_{j<0} 2^{2j s_low}‖u_j‖² + Σ_{j≥0} 2^{2j s_high}‖u_j‖²)^{1/2}` with
/// `‖·‖ = ‖·‖_{L^q_x L²_ω}` and sharp dyadic shells.
fn state_besov<T: Real>(state: &FieldState<T>, q: f64, s_low: f64, s_high: f64) -> T {
    besov_of(state.grid(), state.fields(), state.weights(), q, s_low, s_high)
}

fn besov_of<T: Real>(grid: &Grid<T>, fields: &[SpectralField<T>], weights: &[T], q: f64, s_low: f64, s_high: f64) -> T {
    let hats: Vec<Vec<Complex<T>>> = fields.par_iter().map(frequency_data).collect();
    let shells: Vec<i32> = (0..grid.sites()).map(|i| grid.shell_of(i)).collect();
    let (lo, hi) = (grid.lowest_shell(), grid.highest_shell());
    let sum: T = (lo..=hi)
        .into_par_iter()
        .map(|j| {
            let parts: Vec<Vec<Complex<T>>> = hats
                .iter()
                .map(|h| {
                    let mut m: Vec<Complex<T>> = h
                        .iter()
                        .zip(&shells)
                        .map(|(v, &sj)| {
                            if sj == j {
                                *v
                            } else {
                                Complex::new(T::zero(), T::zero())
                            }
                        })
                        .collect();
                    grid.inverse_in_place(&mut m);
                    m
                })
                .collect();
            let norm = spatial_lq(&omega_layer(&parts, weights), grid.cell_volume(), q);
            let s = if j < 0 { s_low } else { s_high };
            lit::<T>(2f64.powf(2.0 * j as f64 * s)) * norm * norm
        })
        .collect::<Vec<T>>()
        .into_iter()
        .sum();
    sum.sqrt()
}

/// `‖u‖_{L^p_t B_q^{s_low, s_high} L²_ω}`.
pub fn besov_time_norm<T: Real>(
    states: &[FieldState<T>],
    p: f64,
    q: f64,
    s_low: f64,
    s_high: f64,
) -> Result<NormReport> {
    check_exponent("p", p)?;
    check_exponent("q", q)?;
    let (grid, times) = check_series(states)?;
    let per_time = states
        .par_iter()
        .map(|st| to_f64(state_besov(st, q, s_low, s_high)))
        .collect();
    Ok(report(NormId::Besov { p, q, s_low, s_high }, &grid, times, per_time, p))
}

/// `‖u‖_{L²_t B_q^{s_low, s_high} L²_ω}`; a single state gives its spatial
/// Besov norm.
pub fn besov_norm<T: Real>(states: &[FieldState<T>], q: f64, s_low: f64, s_high: f64) -> Result<NormReport> {
    besov_time_norm(states, 2.0, q, s_low, s_high)
}

/// `‖f‖_{B_q^{s_low, s_high}}` of a single field.
pub fn field_besov_norm<T: Real>(f: &SpectralField<T>, q: f64, s_low: f64, s_high: f64) -> Result<f64> {
    check_exponent("q", q)?;
    Ok(to_f64(besov_of(
        f.grid(),
        std::slice::from_ref(f),
        &[T::one()],
        q,
        s_low,
        s_high,
    )))
}

/// The perturbations `z_k(t) = u_k(t) - e^{i(ξ_k x - θ_k t)}` of an orbital
/// run, as states with the same weights.
pub fn perturbation_states<T: Real>(
    states: &[FieldState<T>],
    theta: &DispersionRelation<T>,
) -> Result<Vec<FieldState<T>>> {
    states
        .iter()
        .map(|s| {
            FieldState::new(
                s.grid(),
                s.time(),
                s.perturbation(theta)?,
                s.weights().to_vec(),
                s.modes().to_vec(),
                s.backend(),
            )
        })
        .collect()
}

/// The components of the perturbation norm, with both readings of the last
/// one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZNorms {
    pub dim: usize,
    /// `L^∞_t H^{s_c}_x L²_ω`.
    pub energy: f64,
    /// `L^p_t W^{s_c,p}_x L²_ω`, `p = 2(d+2)/d`.
    pub strichartz: f64,
    /// `L^{d+2}_{t,x} L²_ω`.
    pub lebesgue: f64,
    /// `L⁴_t B_q^{0,1/4} L²_ω`, `q = 4d/(d+1)`.
    pub besov_quarter: f64,
    /// `L⁴_t L^q_x L²_ω`.
    pub lebesgue_quarter: f64,
}

impl ZNorms {
    /// Sum with the Besov reading of the last component.
    pub fn total_besov(&self) -> f64 {
        self.energy + self.strichartz + self.lebesgue + self.besov_quarter
    }

    /// Sum with the Lebesgue reading of the last component.
    pub fn total_lebesgue(&self) -> f64 {
        self.energy + self.strichartz + self.lebesgue + self.lebesgue_quarter
    }
}

/// Discrete perturbation norm of a trajectory of `Z` states.
pub fn z_norms<T: Real>(states: &[FieldState<T>]) -> Result<ZNorms> {
    let (grid, _) = check_series(states)?;
    let d = grid.dim() as f64;
    let s_c = d / 2.0 - 1.0;
    let p = 2.0 * (d + 2.0) / d;
    let q = 4.0 * d / (d + 1.0);
    Ok(ZNorms {
        dim: grid.dim(),
        energy: mixed_norm(states, f64::INFINITY, 2.0, s_c)?.value,
        strichartz: mixed_norm(states, p, p, s_c)?.value,
        lebesgue: mixed_norm(states, d + 2.0, d + 2.0, 0.0)?.value,
        besov_quarter: besov_time_norm(states, 4.0, q, 0.0, 0.25)?.value,
        lebesgue_quarter: mixed_norm(states, 4.0, q, 0.0)?.value,
    })
}

/// The two components of the correlation norm, each a supremum over the
/// stored separations `z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VNorms {
    pub dim: usize,
    /// `sup_z ‖V(·, z)‖_{L^{(d+2)/2}_{t,x}}`.
    pub lebesgue: f64,
    /// `sup_z ‖V(·, z)‖_{L²_t B_2^{-1/2, s_c}}`.
    pub besov: f64,
}

impl VNorms {
    pub fn total(&self) -> f64 {
        self.lebesgue + self.besov
    }
}

pub fn v_norms<T: Real>(v: &VTrajectory<T>) -> Result<VNorms> {
    let grid = v.grid();
    let d = grid.dim() as f64;
    let s_c = d / 2.0 - 1.0;
    let r = (d + 2.0) / 2.0;
    let times: Vec<f64> = v.times().into_iter().map(to_f64).collect();
    let cell = grid.cell_volume();
    let mut lebesgue = 0.0f64;
    let mut besov = 0.0f64;
    for s in 0..v.separations().len() {
        let mut leb = Vec::with_capacity(times.len());
        let mut bes = Vec::with_capacity(times.len());
        for slice in v.values() {
            let row = &slice[s];
            let moduli: Vec<T> = row.iter().map(|c| c.norm()).collect();
            leb.push(to_f64(spatial_lq(&moduli, cell, r)));
            let f = SpectralField::new(grid, Representation::Position, row.clone())?;
            bes.push(field_besov_norm(&f, 2.0, -0.5, s_c)?);
        }
        lebesgue = lebesgue.max(time_lp(&times, &leb, r));
        besov = besov.max(time_lp(&times, &bes, 2.0));
    }
    Ok(VNorms {
        dim: grid.dim(),
        lebesgue,
        besov,
    })
}
