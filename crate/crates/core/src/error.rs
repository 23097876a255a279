use std::io;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("graph has {0} nodes, too many for exhaustive enumeration")]
    GraphTooLarge(usize),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("parameter out of bounds: {0}")]
    OutOfBounds(String),

    #[error("objective returned a non-finite value at evaluation {0}")]
    NonFinite(u64),

    #[error("non-finite training loss at epoch {epoch} (phase {phase})")]
    NonFiniteLoss { phase: usize, epoch: usize },

    #[error("missing label for depth {depth} of instance {graph_id}")]
    MissingLabel { graph_id: usize, depth: usize },

    #[error("model file corrupt: {0}")]
    CorruptModel(String),

    #[error("unsupported model format version {0}")]
    VersionMismatch(u32),

    #[error("depth search reached the cap of {0} without a decrease")]
    DepthCapReached(usize),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
