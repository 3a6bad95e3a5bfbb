//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by samplers, fits, the oracle and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an invalid argument.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Dimensions of two arguments do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A data file could not be ingested. `row` is the 1-based data row
    /// (header excluded); `row == 0` means the failure is not tied to a row.
    #[error("ingestion failed at data row {row}: {message}")]
    Ingestion { row: usize, message: String },

    /// Iterative optimisation ran out of iterations.
    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    ConvergenceFailure {
        iterations: usize,
        grad_norm: f64,
        last_iterate: Vec<f64>,
    },

    /// A numeric routine failed (NaN input, eigensolver stall, underflow).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A chain produced a non-finite state. `replica` is set when the chain
    /// ran inside a replica fan-out.
    #[error("chain diverged at step {step}{}", replica.map(|r| format!(" (replica {r})")).unwrap_or_default())]
    Divergence { step: usize, replica: Option<usize> },

    /// An operation needs samples but the chain is empty.
    #[error("data error: {0}")]
    Data(String),

    /// Invalid experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::ShapeMismatch(_) => 2,
            Error::Ingestion { .. } | Error::Data(_) | Error::Io(_) | Error::Json(_) => 3,
            Error::Divergence { .. } | Error::Numeric(_) | Error::ConvergenceFailure { .. } => 4,
        }
    }
}
