use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite {what} at t = {t} s")]
    NonFinite { what: &'static str, t: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite {what} at t = {t} s after {} control samples", .partial.len())]
    Diverged {
        what: &'static str,
        t: f64,
        partial: Box<crate::harness::TrackingTrace>,
    },

    #[error("plateau unsettled: relative variation {variation:.4} exceeds {limit}")]
    Unsettled { variation: f64, limit: f64 },

    #[error("plateau too short: {available} s available, {window} s requested")]
    PlateauTooShort { available: f64, window: f64 },

    #[error("not identifiable: {0}")]
    Unidentifiable(String),

    #[error("ill-conditioned least-squares system: cond(XᵀX) ≈ {condition:.3e} exceeds {limit:.1e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("time base mismatch: {0}")]
    TimeBaseMismatch(String),

    #[error("mismatched experiments: {0}")]
    MismatchedExperiments(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonFinite { .. } => "non_finite",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Diverged { .. } => "diverged",
            Error::Unsettled { .. } => "unsettled",
            Error::PlateauTooShort { .. } => "plateau_too_short",
            Error::Unidentifiable(_) => "unidentifiable",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::TimeBaseMismatch(_) => "time_base_mismatch",
            Error::MismatchedExperiments(_) => "mismatched_experiments",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
        }
    }

    /// True for errors caused by bad user input (configuration, parameters,
    /// missing files) as opposed to failures during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::Io { .. }
                | Error::Csv { .. }
                | Error::MismatchedExperiments(_)
        )
    }
}

/// Reject negative or non-finite coefficients.
pub(crate) fn ensure_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}
