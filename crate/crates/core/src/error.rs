use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("{what} index {index} out of range (limit {limit}) on line {line}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
        line: usize,
    },

    #[error("graph has no edges, so no random walk can start")]
    NoWalk,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("graph too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("training diverged at step {step}: risk estimate {risk}")]
    Diverged { step: usize, risk: f64 },

    #[error("bad binary format: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
