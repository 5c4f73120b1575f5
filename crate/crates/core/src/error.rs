use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("subsystem dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("tensor product of an empty list of states")]
    EmptyTensor,
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("amplitude count {got} does not match space dimension {expected}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("subsystem index {index} out of range for {count} subsystems")]
    TargetOutOfRange { index: usize, count: usize },
    #[error("duplicate target subsystem {0}")]
    DuplicateTarget(usize),
    #[error("states live in different spaces: {0:?} vs {1:?}")]
    SpaceMismatch(Vec<usize>, Vec<usize>),
    #[error("vectors are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("attempted to collapse onto a zero-norm branch")]
    ZeroNormBranch,
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("label out of range: {0}")]
    LabelOutOfRange(String),
    #[error("message {message} out of range for branch with {count} messages")]
    MessageOutOfRange { message: u64, count: u64 },
    #[error("state too large for brute-force evaluation: {size} amplitudes (limit {limit})")]
    SizeLimit { size: usize, limit: usize },
    #[error("oracle check failed: {0}")]
    OracleMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
