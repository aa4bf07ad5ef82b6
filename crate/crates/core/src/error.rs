use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("unknown document id `{0}`")]
    UnknownDoc(String),

    #[error("collection statistics undefined: {0}")]
    Degenerate(String),

    #[error("index file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt index file: {0}")]
    Corrupt(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no evaluable queries (every query lacks relevant documents)")]
    NoEvaluableQueries,

    #[error("query sets differ: {0}")]
    QueryMismatch(String),
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
