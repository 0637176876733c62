//! Error and result types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("cannot extract n-grams from an empty word")]
    EmptyWord,

    #[error("no weight for n-gram length {length}: smallest configured length is {smallest}")]
    WeightUndefined { length: usize, smallest: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("duplicate query id {0:?}")]
    DuplicateQueryId(String),

    /// An index file failed one of the load-time checks (magic, version,
    /// checksum, truncation, ...). The message names the failed check.
    #[error("index file check failed: {0}")]
    IndexFormat(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    FileIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("queries missing from qrels: {}", ids.join(", "))]
    QueriesMissingFromQrels { ids: Vec<String> },

    #[error("synthetic spec infeasible: {0}")]
    SynthInfeasible(String),

    #[error("dimension sweep failed at dimension {dimension}: {source}")]
    Sweep {
        dimension: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
