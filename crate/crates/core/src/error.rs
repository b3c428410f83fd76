use thiserror::Error;

/// Errors produced by model construction, projections, and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid labeling: {0}")]
    InvalidLabeling(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("marginals carry no edge blocks; project the node blocks first")]
    MissingEdgeBlocks,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("marginals cannot be normalized: {0}")]
    InfeasibleMarginals(String),

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("unsupported structure: {0}")]
    Unsupported(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("state error: {0}")]
    State(String),

    /// The point violates the local polytope constraints by more than the
    /// configured tolerance.
    #[error("point is outside the local polytope (residual {residual:e})")]
    Domain { residual: f64 },

    #[error("duality gap {gap:e} is negative beyond tolerance")]
    NegativeGap { gap: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
