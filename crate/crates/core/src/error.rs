use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("potential vector for {d} nodes must have {expected} entries, got {got}")]
    PotentialLength { d: usize, expected: usize, got: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("graph contains a directed cycle")]
    Cyclic,

    #[error("adjacency matrix has a self-loop at node {0}")]
    SelfLoop(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exhaustive enumeration is limited to 4 nodes, got {0}")]
    EnumerationTooLarge(usize),

    #[error("matrix is not positive definite even with jitter {jitter:e}")]
    NotPositiveDefinite { jitter: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("csv error at line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures caused by diverging or degenerate numerics rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_) | Error::NotPositiveDefinite { .. } | Error::Numeric(_)
        )
    }
}
