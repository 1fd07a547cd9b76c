use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus contains no documents")]
    EmptyCorpus,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("featurizer state has not been fitted")]
    StateNotFitted,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("target at row {row} is not finite")]
    NonFiniteTarget { row: usize },

    #[error("negative target value {0}")]
    NegativeTarget(f64),

    #[error("bundle format version {found} is newer than supported version {supported}")]
    BundleVersionMismatch { found: u32, supported: u32 },

    #[error("corrupt bundle: {0}")]
    CorruptBundle(String),

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input is empty")]
    EmptyInput,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("environment {0:?} appears in both train and test lists")]
    OverlappingEnvironments(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
