use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while decoding a VEF1 feature file.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}, expected \"VEF1\"")]
    BadMagic { found: [u8; 4] },
    #[error("truncated payload: header declares {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("header declares zero {0}")]
    EmptyDimension(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "negative component {value} at index {index}; the chi-square kernel needs nonnegative \
         inputs (enable `clamp_negative` when encoding)"
    )]
    NegativeComponent { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("embedding file line {line}: {message}")]
    EmbeddingParse { line: usize, message: String },

    #[error("out-of-vocabulary token `{token}` (nearest known: {})", suggestions.join(", "))]
    OutOfVocabulary {
        token: String,
        suggestions: Vec<String>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NegativeComponent { .. } => "negative_component",
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format { .. } => "format",
            Error::Manifest { .. } => "manifest",
            Error::EmbeddingParse { .. } => "embedding_parse",
            Error::OutOfVocabulary { .. } => "out_of_vocabulary",
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }

    /// True for failures that happen during computation rather than input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
