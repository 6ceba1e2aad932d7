use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("empty graph")]
    EmptyGraph,

    #[error("node id {id} out of range for {n} nodes")]
    NodeOutOfRange { id: usize, n: usize },

    #[error("unknown node label {0:?}")]
    UnknownLabel(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error(
        "series did not converge within {max_terms} terms (worst column {column}, tail {tail:e})"
    )]
    SeriesNotConverged {
        column: usize,
        max_terms: usize,
        tail: f64,
    },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("dense oracle limited to {limit} nodes, got {n}")]
    TooLarge { n: usize, limit: usize },

    #[error("invalid graph cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
