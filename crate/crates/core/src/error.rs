use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dataset too small: need at least {min}, got {got}")]
    DatasetTooSmall { min: usize, got: usize },

    #[error("labels must be in {{-1,+1}}; found {0}")]
    NonBinaryLabels(f64),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("unsupported reference distribution for this basis domain")]
    UnsupportedReference,

    #[error("matrix is not symmetric")]
    NonSymmetricMatrix,

    #[error("degenerate parameter recovery: sum of x*y vanishes")]
    DegenerateRecovery,

    #[error("no candidates supplied")]
    EmptyCandidates,

    #[error("insufficient data: need {needed}, got {got} ({context})")]
    InsufficientData {
        needed: usize,
        got: usize,
        context: &'static str,
    },

    #[error("unknown class tag: {0}")]
    UnknownClassTag(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
