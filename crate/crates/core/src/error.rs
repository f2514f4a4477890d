use thiserror::Error;

/// Errors produced by the tomography library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("truncation regime violated: {0}")]
    Truncation(String),

    #[error("rank deficient: rank {rank} < {required}{}", element.map(|k| format!(" (element {k} is dependent on its predecessors)")).unwrap_or_default())]
    RankDeficient {
        rank: usize,
        required: usize,
        element: Option<usize>,
    },

    #[error("singular operator (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("not enough samples: need at least {needed}, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
