use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{file} line {line}: {msg}")]
    Parse {
        file: &'static str,
        line: usize,
        msg: String,
    },

    #[error("invalid node id {0}")]
    InvalidNode(u32),

    #[error("invalid edge id {0}")]
    InvalidEdge(u32),

    /// No s-t path of length at most `bound` exists. Callers usually treat the
    /// pair as a hard negative.
    #[error("no path between {source_key} and {target_key} within {bound} hops")]
    NoPath {
        source_key: String,
        target_key: String,
        bound: usize,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("document line {line}: {msg}")]
    Document { line: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("embedding provider failed: {0}")]
    Provider(String),

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("probabilities do not form a simplex (sum = {0})")]
    InvalidSimplex(f64),

    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoPath { .. } => 2,
            _ => 1,
        }
    }
}
