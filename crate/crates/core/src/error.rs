use std::path::PathBuf;

/// Errors produced anywhere in the workbench.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate passage id `{0}`")]
    DuplicateId(String),

    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,

    #[error("cosine similarity is undefined for two zero vectors")]
    UndefinedSimilarity,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("index load failed: {0}")]
    IndexLoad(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("topic {topic} turn {turn} is not flagged for adjudication")]
    NotFlagged { topic: u32, turn: u32 },

    #[error("unknown topic {0}")]
    UnknownTopic(u32),

    #[error("training failed: {0}")]
    Training(String),

    #[error("coverage mismatch: {0}")]
    Coverage(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
