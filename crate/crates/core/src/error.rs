use std::path::PathBuf;

use crate::graph::{NodeId, NodeType};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("graph is frozen")]
    FrozenGraph,
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node key {key:?} already registered as {existing}, not {requested}")]
    NodeTypeConflict {
        key: String,
        existing: NodeType,
        requested: NodeType,
    },
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("invalid transition coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("walk corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary is empty after applying min_count {0}")]
    EmptyVocabulary(u64),
    #[error("node {0} is not in the embedding vocabulary")]
    OutOfVocabulary(NodeId),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("hull vertex set is empty")]
    EmptyHull,
    #[error("non-finite coordinate in hull input")]
    NonFinite,
    #[error("query point lies outside the hull (distance {0:e})")]
    NotInterior(f64),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("test set is empty")]
    EmptyTest,
    #[error("no item reaches utility threshold {0}")]
    NoQualifiedItems(f64),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("config error at {key} (line {line}): {message}")]
    Config {
        key: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {malformed} of {total} lines malformed")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit status for the command-line front end: 2 for configuration
    /// problems, 4 for numerical failures, 3 for everything data-related.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::InvalidCoefficients(_) | Error::InvalidParameter(_) => 2,
            Error::Numeric(_) | Error::NonFinite => 4,
            _ => 3,
        }
    }
}
