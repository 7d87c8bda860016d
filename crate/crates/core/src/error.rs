use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty vector")]
    EmptyVector,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A hypothesis of the stability theorem (n > d or n > 2d) does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("support enumeration needs {count} subproblems, above the cap of {cap}; use a smaller instance")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("matrix has zero factors")]
    ZeroFactors,

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
