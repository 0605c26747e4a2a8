//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SlekanError {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested strain magnitude is at or beyond the strain limit 1/(E*beta).
    #[error(
        "infeasible strain {strain}: magnitude must stay strictly below the strain limit {limit}"
    )]
    InfeasibleStrain { strain: f64, limit: f64 },

    /// An operation was applied to a spline in the wrong mode.
    #[error("mode error: {0}")]
    Mode(String),

    /// Text input failed to parse. Locations are 1-based.
    #[error("parse error at {path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    /// Every calibration restart ended infeasible.
    #[error("calibration failed: no restart produced a feasible parameter set\n{diagnostics}")]
    CalibrationFailed { diagnostics: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SlekanError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SlekanError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, SlekanError>;
