use thiserror::Error;

use crate::solver::SolverFailure;

#[derive(Debug, Error)]
pub enum TodaError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mesh mismatch: expected mesh {expected:016x}, got {found:016x}")]
    MeshMismatch { expected: u64, found: u64 },

    /// The ambient vector is outside the tube where the nearest-point
    /// projection onto the surface is well defined.
    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failed: {}", .0.message)]
    Solver(Box<SolverFailure>),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TodaError {
    /// True for failures that come from the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, TodaError::Numerical(_) | TodaError::Solver(_))
    }
}

pub type Result<T> = std::result::Result<T, TodaError>;
