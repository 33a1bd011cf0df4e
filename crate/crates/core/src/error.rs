use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the placement library.
#[derive(Debug, Error)]
pub enum OspError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    /// Two nodes share a position where a direction is required.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("{path}:{line}: {message}")]
    Input {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("no feasible solution: {0}")]
    NoFeasibleSolution(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl OspError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        OspError::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        OspError::InvalidInput(message.into())
    }
}

pub type Result<T, E = OspError> = std::result::Result<T, E>;
