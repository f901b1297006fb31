use thiserror::Error;

/// Errors raised by the solver and certification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("representation mismatch: expected {expected}, found {found}")]
    RepresentationMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("interaction potential is not even: {0}")]
    NotEven(String),

    #[error("point mass at {location:?} does not lie on the position lattice")]
    OffLattice { location: Vec<f64> },

    #[error("unsupported derivative order {order} (maximum {max})")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("unsupported exponent: {0}")]
    UnsupportedExponent(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("blow-up detected after t = {last_good_time}")]
    BlowUp { last_good_time: f64 },

    #[error("time grid mismatch: {0}")]
    TimeGridMismatch(String),

    #[error("power iteration did not converge after {iterations} steps")]
    NumericalDegeneracy { iterations: usize },

    #[error("invertibility not certified: operator norm {norm} >= 1")]
    InvertibilityNotCertified { norm: f64 },

    #[error("Neumann series did not reach tolerance after {terms} terms (residual {residual})")]
    NeumannStalled { terms: usize, residual: f64 },

    #[error("time window [{t_min}, {t_max}] exceeds the wrap-around time {t_wrap}")]
    WrapWindow { t_min: f64, t_max: f64, t_wrap: f64 },

    #[error("trajectory ends at t = {available}, requested {requested}")]
    TrajectoryTooShort { available: f64, requested: f64 },

    #[error("incomplete input: {0}")]
    IncompleteInput(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
