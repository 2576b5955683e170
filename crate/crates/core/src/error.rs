use thiserror::Error;

use crate::grid::BranchId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems with dataset text or network validity.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("{file}: line {line}: {message}")]
    Parse {
        file: &'static str,
        line: u64,
        message: String,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("unsupported dataset format version {0}")]
    FormatVersion(u32),
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("invalid configuration: {0}")]
    Configuration(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Which operating constraint a configuration violates.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("all-node-traversing constraint violated: some bus is not connected to the root")]
    Traversal,
    #[error("radiality constraint violated: closed branches do not form a spanning tree")]
    Radiality,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("non-finite parameter in layer {layer}")]
    NonFiniteParameter { layer: usize },
    #[error("non-finite gradient in episode {episode}")]
    NonFiniteGradient { episode: usize },
    #[error("input length {got} does not match network input {expected}")]
    InputShape { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("branch {0} is already open")]
    InvalidAction(BranchId),
    #[error("no valid actions to choose from")]
    EmptyMask,
    #[error("no feasible episode in the training log")]
    NoFeasibleEpisode,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
