use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid probability: {0}")]
    InvalidProbability(f64),
    #[error("weight mismatch: {0}")]
    WeightMismatch(String),
    #[error("degenerate sample")]
    DegenerateSample,
    #[error("degenerate labels")]
    DegenerateLabels,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("insufficient data: {0} usable rows")]
    InsufficientData(usize),
    #[error("degenerate protected attribute")]
    DegenerateProtected,
    #[error("group '{0}' has fewer than 2 rows")]
    SparseGroup(String),
    #[error("split infeasible: {0}")]
    SplitInfeasible(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("zero variance")]
    ZeroVariance,
    #[error("insufficient conditional support")]
    InsufficientConditionalSupport,
    #[error("unknown task: {0}")]
    UnknownTask(String),
    #[error("unknown method '{0}' (valid: P1, P2, P3, P4, C1, C2)")]
    UnknownMethod(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by the command-line front end to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::UnknownMethod(_) | Error::UnknownTask(_) => ErrorKind::Config,
            Error::SchemaMismatch(_)
            | Error::InsufficientData(_)
            | Error::DegenerateProtected
            | Error::SparseGroup(_)
            | Error::SplitInfeasible(_)
            | Error::Alignment(_)
            | Error::Io { .. }
            | Error::Csv { .. }
            | Error::NonFinite(_) => ErrorKind::Data,
            _ => ErrorKind::Internal,
        }
    }
}
