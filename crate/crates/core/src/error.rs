use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Each variant has a stable short name (see [`Error::kind`]) that the CLI
/// prints in front of the message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular (pivot {pivot:.3e} below threshold {threshold:.3e})")]
    SingularMatrix { pivot: f64, threshold: f64 },

    #[error("design matrix is rank deficient (column {column} has no independent component)")]
    RankDeficient { column: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-positive entry {value} at {location}")]
    NonPositiveEntry { value: f64, location: String },

    #[error("non-finite entry {value} at {location}")]
    NonFinite { value: f64, location: String },

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("log-space value {value:.6e} exceeds the representable range (|x| > {limit})")]
    Overflow { value: f64, limit: f64 },

    #[error("model has a control matrix but no control input was given")]
    MissingControl,

    #[error("trajectory too short: {len} states, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("insufficient data: {residuals} residuals leave no degrees of freedom for {params} parameters per row")]
    InsufficientData { residuals: usize, params: usize },

    #[error(
        "infeasible bounds at step {step}, component {component}: lower {lower} >= upper {upper}"
    )]
    InfeasibleBounds {
        step: usize,
        component: usize,
        lower: f64,
        upper: f64,
    },

    #[error("{0}")]
    InvalidWeight(String),

    #[error(
        "projected gradient stopped after {iterations} iterations (stationarity {residual:.3e})"
    )]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: time column jumps from {prev} to {next} at line {line}")]
    GapInTime {
        path: String,
        line: usize,
        prev: i64,
        next: i64,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used by the command line diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SingularMatrix { .. } => "singular-matrix",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NonPositiveEntry { .. } => "non-positive-entry",
            Error::NonFinite { .. } => "non-finite",
            Error::InvalidValue(_) => "invalid-value",
            Error::Overflow { .. } => "overflow",
            Error::MissingControl => "missing-control",
            Error::TooShort { .. } => "too-short",
            Error::InsufficientData { .. } => "insufficient-data",
            Error::InfeasibleBounds { .. } => "infeasible-bounds",
            Error::InvalidWeight(_) => "invalid-weight",
            Error::IterationLimit { .. } => "iteration-limit",
            Error::Parse { .. } => "parse-error",
            Error::GapInTime { .. } => "gap-in-time",
            Error::Io { .. } => "io-error",
        }
    }

    pub(crate) fn mismatch(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            actual,
        }
    }
}
