use thiserror::Error;

/// Errors raised by grid construction, field algebra, solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("field is not real-valued (max |imag| = {0:e})")]
    NonReal(f64),

    #[error("node {0} is not an interior node of the ball grid")]
    NotInterior(usize),

    #[error("complex structure violates invariant: {0}")]
    InvalidStructure(String),

    #[error("matrix at node {node} is not positive definite")]
    NotPositiveDefinite { node: usize },

    #[error("equation requires complex dimension n >= 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("cone violation: minimum eigenvalue {margin:e} at node {node}")]
    ConeViolation { node: usize, margin: f64 },

    #[error("missing input: {0}")]
    Missing(&'static str),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("inconsistent statistics: {0}")]
    Inconsistent(String),

    #[error("hypothesis violated at s = {s:e}, t = {t:e}: t*Phi(s-t) = {lhs:e} > {rhs:e}")]
    HypothesisViolated { s: f64, t: f64, lhs: f64, rhs: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
