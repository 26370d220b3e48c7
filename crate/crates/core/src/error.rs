use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A vector that must be normalized has zero Euclidean norm.
    #[error("degenerate input: {0} has zero norm")]
    DegenerateVector(&'static str),

    /// An update produced the zero vector and cannot be normalized.
    #[error("degenerate update: updated preference vector has zero norm")]
    DegenerateUpdate,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("tag vector has no set coordinates")]
    EmptyTagVector,

    #[error("session batch has {rows} rows but {residuals} residuals")]
    BatchShape { rows: usize, residuals: usize },

    #[error("session batch is empty")]
    EmptyBatch,

    /// Cholesky factorization hit a non-positive pivot. Carries the
    /// offending k x k matrix in row-major order.
    #[error("regularized Gram matrix is not positive definite (pivot {pivot})")]
    Factorization { pivot: usize, gram: Vec<f64> },

    #[error("candidate pool exhausted: requested {requested}, available {available}")]
    PoolExhausted { requested: usize, available: usize },

    #[error("duplicate candidate id {0}")]
    DuplicateCandidate(u32),

    #[error("decay measurement needs {steps} orthogonal directions but only {available} exist")]
    TooManySteps { steps: usize, available: usize },

    #[error("swipe {index} is out of range for a trace of length {len}")]
    SwipeOutOfRange { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
