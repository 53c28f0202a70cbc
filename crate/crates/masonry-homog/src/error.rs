//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by geometry builders, solvers and I/O plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed user input (dimensions, parameters, config files).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Mismatch between ambient dimensions of two quantities.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A mesh that cannot support the cell problem (e.g. floating block).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// The active-set QP used for cone projection failed to terminate.
    #[error("cone projection QP did not converge after {iterations} iterations (residual {residual:.3e})")]
    QpNonConvergence { iterations: usize, residual: f64 },

    /// NaN or Inf detected inside an iterative solver.
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
