use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Text input could not be parsed. Carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A structural or numerical invariant was violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// Array or vector dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A computed quantity became NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// The momentum controller lost input authority (rank collapse).
    #[error("controller fault: {0}")]
    ControllerFault(String),

    /// Log or dataset schemas disagree.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
