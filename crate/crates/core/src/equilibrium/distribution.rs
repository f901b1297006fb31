use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Grid, Representation, SpectralField};
use crate::scalar::{lit, to_f64, Real};

/// Largest continuum mass fraction the lattice may cut off before a
/// resolution warning is raised.
pub const TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Analytic family a distribution was built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    FermiDirac {
        density: f64,
        temperature: f64,
        chemical_potential: f64,
    },
    Gaussian {
        density: f64,
        sigma: f64,
    },
    Custom,
}

/// Momentum distribution `g = f²` sampled on the frequency lattice.
#[derive(Clone, Debug)]
pub struct MomentumDistribution<T: Real> {
    grid: Grid<T>,
    values: Vec<T>,
    family: Family,
    resolution_warning: Option<String>,
}

/// Fermi function `1/(e^a + 1)` without overflow.
fn fermi(a: f64) -> f64 {
    if a > 0.0 {
        let e = (-a).exp();
        e / (1.0 + e)
    } else {
        1.0 / (a.exp() + 1.0)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Fraction of `∫ profile(|ξ|) dξ` lying outside the ball of radius `cut`.
fn radial_tail_fraction(profile: impl Fn(f64) -> f64, dim: usize, cut: f64, r_max: f64) -> f64 {
    if cut >= r_max {
        return 0.0;
    }
    let integrand = |r: f64| r.powi(dim as i32 - 1) * profile(r);
    let total = simpson(integrand, 0.0, r_max, 20_000);
    let tail = simpson(integrand, cut, r_max, 20_000);
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

impl<T: Real> MomentumDistribution<T> {
    /// `g = ρ C T^{-d/2} / (e^{(|ξ|²-μ)/T} + 1)` with `C` fixed so that
    /// `Δξ^d Σ g = ρ` on the lattice.
    pub fn fermi_dirac(grid: &Grid<T>, density: T, temperature: T, mu: T) -> Result<Self> {
        if !(temperature > T::zero()) || !temperature.is_finite() {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        if !(density > T::zero()) || !density.is_finite() {
            return Err(Error::Domain(format!("density must be positive, got {density}")));
        }
        let (t, m) = (to_f64(temperature), to_f64(mu));
        let raw: Vec<f64> = (0..grid.sites())
            .map(|i| fermi((to_f64(grid.xi_sq(i)) - m) / t))
            .collect();
        let r_max = (m.max(0.0) + 80.0 * t).sqrt();
        let tail = radial_tail_fraction(|r| fermi((r * r - m) / t), grid.dim(), to_f64(grid.nyquist()), r_max);
        let family = Family::FermiDirac {
            density: to_f64(density),
            temperature: t,
            chemical_potential: m,
        };
        Ok(Self::normalised(grid, raw, density, family, tail))
    }

    /// `g ∝ e^{-|ξ|²/(2σ²)}` normalised to `Δξ^d Σ g = ρ`.
    pub fn gaussian(grid: &Grid<T>, density: T, sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !(density > T::zero()) {
            return Err(Error::Domain(format!(
                "gaussian needs positive density and width, got ({density}, {sigma})"
            )));
        }
        let s = to_f64(sigma);
        let raw: Vec<f64> = (0..grid.sites())
            .map(|i| (-to_f64(grid.xi_sq(i)) / (2.0 * s * s)).exp())
            .collect();
        let tail = radial_tail_fraction(
            |r| (-r * r / (2.0 * s * s)).exp(),
            grid.dim(),
            to_f64(grid.nyquist()),
            40.0 * s,
        );
        let family = Family::Gaussian {
            density: to_f64(density),
            sigma: s,
        };
        Ok(Self::normalised(grid, raw, density, family, tail))
    }

    fn normalised(grid: &Grid<T>, raw: Vec<f64>, density: T, family: Family, tail: f64) -> Self {
        let mass: f64 = raw.iter().sum::<f64>() * to_f64(grid.dual_cell_volume());
        let scale = to_f64(density) / mass;
        let values = raw.into_iter().map(|v| lit::<T>(v * scale)).collect();
        let resolution_warning = (tail > TRUNCATION_TOLERANCE).then(|| {
            let msg = format!("lattice truncates a fraction {tail:.3e} of the continuum momentum distribution");
            log::warn!("{msg}");
            msg
        });
        Self {
            grid: grid.clone(),
            values,
            family,
            resolution_warning,
        }
    }

    /// Arbitrary nonnegative values per frequency site.
    pub fn custom(grid: &Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.sites() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.sites(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !(*v >= T::zero()) || !v.is_finite()) {
            return Err(Error::Domain(format!("g must be finite and nonnegative (site {bad})")));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            family: Family::Custom,
            resolution_warning: None,
        })
    }

    pub fn zero(grid: &Grid<T>) -> Self {
        Self::custom(grid, vec![T::zero(); grid.sites()]).expect("zero is admissible")
    }

    /// A single occupied mode at frequency site `idx` with occupation `n`.
    pub fn single_mode(grid: &Grid<T>, idx: usize, n: T) -> Result<Self> {
        let mut values = vec![T::zero(); grid.sites()];
        values[idx] = n / grid.dual_cell_volume();
        Self::custom(grid, values)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn resolution_warning(&self) -> Option<&str> {
        self.resolution_warning.as_deref()
    }

    /// Mode occupations `n_k = g(ξ_k)Δξ^d`.
    pub fn occupations(&self) -> Vec<T> {
        let v = self.grid.dual_cell_volume();
        self.values.iter().map(|g| *g * v).collect()
    }

    /// `Σ_k n_k`, the lattice total density.
    pub fn total_mass(&self) -> T {
        self.occupations().into_iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    /// `s·g`.
    pub fn scaled(&self, s: T) -> Self {
        let family = match self.family {
            Family::FermiDirac {
                density,
                temperature,
                chemical_potential,
            } => Family::FermiDirac {
                density: density * to_f64(s),
                temperature,
                chemical_potential,
            },
            Family::Gaussian { density, sigma } => Family::Gaussian {
                density: density * to_f64(s),
                sigma,
            },
            Family::Custom => Family::Custom,
        };
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| *v * s).collect(),
            family,
            resolution_warning: self.resolution_warning.clone(),
        }
    }

    pub fn as_field(&self) -> SpectralField<T> {
        let data = self.values.iter().map(|v| Complex::new(*v, T::zero())).collect();
        SpectralField::new(&self.grid, Representation::Frequency, data).expect("one value per site")
    }
}
