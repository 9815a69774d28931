use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("LF syntax error at token {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown role suffix `{0}`")]
    UnknownRole(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("no type derivable for token `{token}` at position {position}")]
    DerivationGap { token: String, position: usize },

    #[error("no complete derivation for type sequence [{0}]")]
    NoParse(String),

    #[error("ambiguous parse for [{types}]: {reason}")]
    AmbiguousParse { types: String, reason: String },

    #[error("functor at content position {0} received more arguments than its type licenses")]
    RoleExhausted(usize),

    #[error("type table: {0}")]
    TypeTable(String),

    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing embedding for {0}")]
    MissingEmbedding(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{missing} of {total} examples lack a trajectory")]
    Coverage { missing: usize, total: usize },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
