use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("record {name:?} (line {line}): {field} out of range ({value})")]
    CoordinateOutOfRange {
        name: String,
        line: u64,
        field: &'static str,
        value: f64,
    },

    #[error("bad magic: not a GEOEMB1 file")]
    BadMagic,

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("unsupported dtype tag {0} (only 0 = f32 is supported)")]
    UnsupportedDtype(u32),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("row mismatch: {what} has {found} rows, expected {expected}")]
    RowMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("column mismatch: expected {expected} columns, found {found}")]
    ColumnMismatch { expected: usize, found: usize },

    #[error("locations digest mismatch: expected {expected:016x}, found {found:016x}; regenerate it from this locations file")]
    DigestMismatch { expected: u64, found: u64 },

    #[error("singular system; supply λ > 0")]
    Singular,

    #[error("factorization failed at λ = {0} even after jitter")]
    FactorizationFailed(f64),

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("undefined Gini: all values are zero")]
    UndefinedGini,

    #[error("{0}")]
    Invalid(String),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    /// True for failures of the environment (missing or unreadable files)
    /// rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv { source, .. } => source.is_io_error(),
            Error::Json { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
