//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The budget arithmetic produced a negative quadratic coefficient in the
    /// fallback branch: the regularization weight is too large for this ε.
    #[error("budget rejected: {reason}")]
    BudgetRejected { reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("solver did not converge after {iterations} iterations: gradient norm {residual:.3e} > tol {tol:.3e}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tol: f64,
    },

    #[error("split produced an empty side")]
    EmptySplit,

    #[error("AUC requires at least one positive and one negative label")]
    SingleClass,

    #[error("all lambda grid points rejected by budget arithmetic: {0}")]
    AllLambdasRejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
