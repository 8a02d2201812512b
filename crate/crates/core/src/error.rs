use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("unknown node type `{0}`")]
    UnknownType(String),
    #[error("dangling edge in {relation} at row {row}: ({src}, {dst}) exceeds node counts")]
    DanglingEdge {
        relation: String,
        row: usize,
        src: usize,
        dst: usize,
    },
    #[error("inconsistent feature dimension for type {node_type}: expected {expected}, got {got}")]
    FeatureDimInconsistent {
        node_type: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("too few labeled nodes ({nodes}) for {folds} folds")]
    TooFewNodes { nodes: usize, folds: usize },
    #[error("signal type {signal_type} is not reachable from {anchor} at hop {hop}")]
    UnreachableSignal {
        anchor: String,
        signal_type: String,
        hop: usize,
    },
    #[error("hop mismatch: neighborhood is hop {neighborhood}, candidate is hop {candidate}")]
    HopMismatch { neighborhood: usize, candidate: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite input: {0}")]
    NonFiniteInput(String),
    #[error("non-finite activation at stage {0}")]
    NonFiniteActivation(String),
    #[error("non-finite gradient: {0}")]
    NonFiniteGradient(String),
    #[error("empty mask")]
    EmptyMask,
    #[error("search space too large: {size} architectures exceeds cap {cap}")]
    SpaceTooLarge { size: usize, cap: usize },
    #[error("inconsistent search space: {0}")]
    InconsistentSpace(String),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }
}
