use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("vertex {vertex} out of range for a space with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("field has {got} values but the space has {expected} vertices")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("space is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("right-hand side has nonzero mean {mean:e}")]
    NonzeroMean { mean: f64 },

    #[error("{solver} did not converge after {iterations} iterations (best residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dense solve requested for {n} vertices, above the cap of {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error(transparent)]
    Fixedpoint(#[from] Box<crate::fixedpoint::FixedPointError>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
