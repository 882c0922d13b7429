use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid action: component {index} is not finite ({value})")]
    Action { index: usize, value: f64 },

    #[error("episode finished: step called after {horizon} steps")]
    EpisodeFinished { horizon: usize },

    #[error("backend error at step {step}: {source}")]
    BackendAtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("backend error: {0}")]
    Backend(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("segment too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("undefined similarity: zero-norm embedding")]
    UndefinedSimilarity,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error in minibatch {batch}: {what}")]
    Numeric { batch: usize, what: String },

    #[error("incompatible: {0}")]
    Compatibility(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("incompatible protocol version {got}, expected {expected}")]
    IncompatibleProtocol { got: u32, expected: u32 },

    #[error("connection error: {0}")]
    Connection(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("wav error: {0}")]
    Wav(String),

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
