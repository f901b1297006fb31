//! Run configuration: one TOML file per run.

use std::fs;
use std::path::{Path, PathBuf};

use hfdyn::dynamics::gaussian_bump;
use hfdyn::{
    Coord, Grid64, InteractionPotential64, MomentumDistribution64, Representation, SpectralField64, ThresholdMode,
    MAX_DIM,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    pub distribution: DistributionConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    #[serde(default)]
    pub hypotheses: HypothesesConfig,
    #[serde(default)]
    pub linear_response: LinearResponseConfig,
    #[serde(default)]
    pub scatter: ScatterConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

/// A point mass `a·δ_at`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMass {
    pub at: Vec<f64>,
    pub a: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    #[default]
    Zero,
    /// `a·δ_0`.
    Point {
        a: f64,
    },
    /// `a(δ_y + δ_{-y})`.
    Pair {
        a: f64,
        y: Vec<f64>,
    },
    /// `amplitude·e^{-|x|²/(2 width²)}` on the lattice.
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    Masses {
        masses: Vec<PointMass>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionConfig {
    Zero,
    FermiDirac { density: f64, temperature: f64, mu: f64 },
    Gaussian { density: f64, sigma: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    #[default]
    Orbital,
    MonteCarlo {
        realizations: usize,
    },
}

/// One Gaussian packet of the initial perturbation profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default)]
    pub center: Vec<f64>,
    pub width: f64,
    #[serde(default)]
    pub momentum: Vec<f64>,
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// `Z₀` of size `epsilon` in `L²_ω L²_x`, with profile given either by
/// `modes` or by `file` (little-endian complex128 values in position space).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t: f64,
    pub dt: f64,
    #[serde(default = "one_usize")]
    pub checkpoint_stride: usize,
    #[serde(default = "one_usize")]
    pub observer_stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesesConfig {
    pub threshold: ThresholdMode,
}

impl Default for HypothesesConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdMode::OperatorNorm { dt: 0.1, steps: 16 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearResponseConfig {
    pub dt: f64,
    pub steps: usize,
    /// Scale of the random Hermitian right-hand side.
    pub amplitude: f64,
}

impl Default for LinearResponseConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            steps: 16,
            amplitude: 1.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    /// Extraction time; defaults to `time.T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Directory written by `evolve`; the run is recomputed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub shell: i32,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            shell: 1,
            t_min: 1.0,
            t_max: 10.0,
            samples: 24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative mass drift per unit time before `evolve` warns.
    pub mass_drift: f64,
    /// Allowed relative deviation of the decay exponent from `-d/2`.
    pub decay_exponent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass_drift: 1e-10,
            decay_exponent: 0.1,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// `missing field `N`` reported at path `grid` becomes `grid.N`.
fn field_path(path: &str, message: &str) -> String {
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    match (path, missing) {
        (".", Some(f)) => f.to_string(),
        (_, Some(f)) => format!("{path}.{f}"),
        _ => path.to_string(),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| {
            let at = e.span().map(|s| line_col(text, s.start));
            CliError::Config {
                field: String::new(),
                line: at.map(|a| a.0),
                message: e.message().trim().to_string(),
            }
        })?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().trim().to_string();
            CliError::Config {
                field: field_path(&path, &message),
                line: inner.span().map(|s| line_col(text, s.start).0),
                message,
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            field: String::new(),
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Canonical TOML form; parsing it gives back an identical config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn time(&self) -> Result<&TimeConfig, CliError> {
        self.time
            .as_ref()
            .ok_or_else(|| invalid("time", "this subcommand needs a [time] section"))
    }

    fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if !(1..=MAX_DIM).contains(&g.d) {
            return Err(invalid("grid.d", format!("dimension must be in 1..={MAX_DIM}")));
        }
        if g.n < 2 {
            return Err(invalid("grid.N", "need at least two points per axis"));
        }
        positive("grid.L", g.l)?;
        match &self.potential {
            PotentialConfig::Zero => {}
            PotentialConfig::Point { a } => finite("potential.a", *a)?,
            PotentialConfig::Pair { a, y } => {
                finite("potential.a", *a)?;
                coords("potential.y", y, g.d)?;
            }
            PotentialConfig::Gaussian { amplitude, width } => {
                finite("potential.amplitude", *amplitude)?;
                positive("potential.width", *width)?;
            }
            PotentialConfig::Masses { masses } => {
                for (i, m) in masses.iter().enumerate() {
                    finite(&format!("potential.masses[{i}].a"), m.a)?;
                    coords(&format!("potential.masses[{i}].at"), &m.at, g.d)?;
                }
            }
        }
        match &self.distribution {
            DistributionConfig::Zero => {}
            DistributionConfig::FermiDirac {
                density,
                temperature,
                mu,
            } => {
                positive("distribution.density", *density)?;
                positive("distribution.temperature", *temperature)?;
                finite("distribution.mu", *mu)?;
            }
            DistributionConfig::Gaussian { density, sigma } => {
                positive("distribution.density", *density)?;
                positive("distribution.sigma", *sigma)?;
            }
        }
        if let BackendConfig::MonteCarlo { realizations } = self.backend {
            if realizations == 0 {
                return Err(invalid("backend.realizations", "must be at least 1"));
            }
        }
        let p = &self.perturbation;
        if !(p.epsilon >= 0.0 && p.epsilon.is_finite()) {
            return Err(invalid("perturbation.epsilon", "must be finite and non-negative"));
        }
        if p.file.is_some() && !p.modes.is_empty() {
            return Err(invalid("perturbation", "give either modes or file, not both"));
        }
        for (i, m) in p.modes.iter().enumerate() {
            positive(&format!("perturbation.modes[{i}].width"), m.width)?;
            finite(&format!("perturbation.modes[{i}].amplitude"), m.amplitude)?;
            optional_coords(&format!("perturbation.modes[{i}].center"), &m.center, g.d)?;
            optional_coords(&format!("perturbation.modes[{i}].momentum"), &m.momentum, g.d)?;
        }
        if let Some(t) = &self.time {
            positive("time.T", t.t)?;
            positive("time.dt", t.dt)?;
            if t.checkpoint_stride == 0 {
                return Err(invalid("time.checkpoint_stride", "must be at least 1"));
            }
            if t.observer_stride == 0 {
                return Err(invalid("time.observer_stride", "must be at least 1"));
            }
        }
        match self.hypotheses.threshold {
            ThresholdMode::Configured { threshold } => positive("hypotheses.threshold.threshold", threshold)?,
            ThresholdMode::OperatorNorm { dt, steps } => {
                positive("hypotheses.threshold.dt", dt)?;
                if steps == 0 {
                    return Err(invalid("hypotheses.threshold.steps", "must be at least 1"));
                }
            }
        }
        let lr = &self.linear_response;
        positive("linear_response.dt", lr.dt)?;
        positive("linear_response.amplitude", lr.amplitude)?;
        if lr.steps == 0 {
            return Err(invalid("linear_response.steps", "must be at least 1"));
        }
        if let Some(t) = self.scatter.time {
            positive("scatter.time", t)?;
        }
        let dc = &self.decay;
        positive("decay.t_min", dc.t_min)?;
        if !(dc.t_max > dc.t_min) || !dc.t_max.is_finite() {
            return Err(invalid("decay.t_max", "must exceed decay.t_min"));
        }
        if dc.samples < 2 {
            return Err(invalid("decay.samples", "need at least two samples"));
        }
        positive("tolerances.mass_drift", self.tolerances.mass_drift)?;
        positive("tolerances.decay_exponent", self.tolerances.decay_exponent)?;
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid64, CliError> {
        Grid64::new(self.grid.d, self.grid.n, self.grid.l).map_err(|e| invalid("grid", e))
    }

    pub fn build_potential(&self, grid: &Grid64) -> Result<InteractionPotential64, CliError> {
        let built = match &self.potential {
            PotentialConfig::Zero => Ok(InteractionPotential64::zero(grid)),
            PotentialConfig::Point { a } => Ok(InteractionPotential64::point(grid, *a)),
            PotentialConfig::Pair { a, y } => InteractionPotential64::symmetric_pair(grid, coord(y), *a),
            PotentialConfig::Gaussian { amplitude, width } => {
                InteractionPotential64::gaussian(grid, *amplitude, *width)
            }
            PotentialConfig::Masses { masses } => {
                InteractionPotential64::new(grid, masses.iter().map(|m| (coord(&m.at), m.a)).collect(), None)
            }
        };
        built.map_err(|e| invalid("potential", e))
    }

    pub fn build_distribution(&self, grid: &Grid64) -> Result<MomentumDistribution64, CliError> {
        let built = match &self.distribution {
            DistributionConfig::Zero => Ok(MomentumDistribution64::zero(grid)),
            DistributionConfig::FermiDirac {
                density,
                temperature,
                mu,
            } => MomentumDistribution64::fermi_dirac(grid, *density, *temperature, *mu),
            DistributionConfig::Gaussian { density, sigma } => MomentumDistribution64::gaussian(grid, *density, *sigma),
        };
        built.map_err(|e| invalid("distribution", e))
    }

    /// The perturbation profile, or `None` when `epsilon = 0` or no profile is given.
    pub fn build_profile(&self, grid: &Grid64) -> Result<Option<SpectralField64>, CliError> {
        let p = &self.perturbation;
        if p.epsilon == 0.0 {
            return Ok(None);
        }
        if let Some(file) = &p.file {
            let bytes = fs::read(file).map_err(|e| invalid("perturbation.file", format!("{}: {e}", file.display())))?;
            if bytes.len() != 16 * grid.sites() {
                return Err(invalid(
                    "perturbation.file",
                    format!(
                        "expected {} complex128 values, found {} bytes",
                        grid.sites(),
                        bytes.len()
                    ),
                ));
            }
            let data = bytes
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    Complex64::new(re, im)
                })
                .collect();
            return SpectralField64::new(grid, Representation::Position, data)
                .map(Some)
                .map_err(|e| invalid("perturbation.file", e));
        }
        if p.modes.is_empty() {
            return Err(invalid("perturbation.modes", "epsilon > 0 needs modes or a file"));
        }
        let mut profile = SpectralField64::zeros(grid, Representation::Position);
        for m in &p.modes {
            let bump = gaussian_bump(grid, coord(&m.center), m.width, coord(&m.momentum));
            profile
                .axpy(Complex64::new(m.amplitude, 0.0), &bump)
                .expect("same grid");
        }
        Ok(Some(profile))
    }
}

fn coord(v: &[f64]) -> Coord<f64> {
    let mut c = [0.0; MAX_DIM];
    c[..v.len()].copy_from_slice(v);
    c
}

pub(crate) fn invalid(field: &str, message: impl ToString) -> CliError {
    CliError::Config {
        field: field.to_string(),
        line: None,
        message: message.to_string(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

fn coords(field: &str, v: &[f64], d: usize) -> Result<(), CliError> {
    if v.len() != d {
        return Err(invalid(field, format!("expected {d} coordinates, got {}", v.len())));
    }
    v.iter().try_for_each(|x| finite(field, *x))
}

fn optional_coords(field: &str, v: &[f64], d: usize) -> Result<(), CliError> {
    if v.is_empty() {
        Ok(())
    } else {
        coords(field, v, d)
    }
}
