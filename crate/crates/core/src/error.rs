use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid function class: {0}")]
    InvalidClass(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("product class has {size} members, above the enumeration cap {cap}")]
    EnumerationCap { size: u128, cap: usize },

    #[error("dataset for step {step} is empty")]
    EmptyDataset { step: usize },

    #[error("version space became empty at round {round} ({context})")]
    EmptyVersionSpace { round: usize, context: &'static str },

    #[error("no termination within {max_phases} phases")]
    MaxPhasesExceeded { max_phases: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
