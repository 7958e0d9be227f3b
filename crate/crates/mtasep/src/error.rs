use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("empty configuration text")]
    EmptyInput,
    #[error("malformed token `{0}` in configuration text")]
    MalformedToken(String),
    #[error("class label {label} exceeds declared species count {species}")]
    LabelOutOfRange { label: u32, species: u32 },
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("operation requires {required}, got {got}")]
    Precondition { required: String, got: String },
    #[error("enumeration requires {required} states, above the bound {bound}")]
    BoundExceeded { required: u128, bound: u128 },
    #[error("counter reached truncation dimension {d} during operator application")]
    TruncationOverflow { d: usize },
    #[error("operator rank {op_rank} does not match state rank {state_rank}")]
    RankMismatch { op_rank: usize, state_rank: usize },
    #[error("lower row has fewer free particles than the labels to bind")]
    PopcountMismatch,
    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),
    #[error("generator kernel has dimension {dim}; sector is not irreducible")]
    SingularGenerator { dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
