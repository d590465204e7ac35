use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("half-space presentation is empty")]
    EmptyPresentation,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty effective domain: every sample is +inf")]
    EmptyEffectiveDomain,

    #[error("point {0:?} is not strictly interior to the domain")]
    NotInterior(Vec<f64>),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("finite-difference stencil leaves the grid at node {0:?}")]
    StencilOutOfGrid(Vec<usize>),

    #[error("fiber at x-node {0} is not convex")]
    NonConvexFiber(usize),

    #[error("fiber at x-node {0} carries zero mass")]
    ZeroMass(usize),

    #[error("family is not locally comparable: {0}")]
    NotComparable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
