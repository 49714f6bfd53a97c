use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// Variants fall into three families (configuration, data, modeling) so the
/// command line can map them onto distinct exit codes via [`Error::category`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid hyperparameter `{key}`: {reason}")]
    InvalidParam { key: String, reason: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("header is missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("column mismatch; expected {expected:?}, found {found:?}")]
    ColumnMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("singular information matrix; collinear columns: {0:?}")]
    Singular(Vec<String>),

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse error family, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Modeling,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::InvalidParam { .. } | Error::Schema(_) | Error::Json(_) => {
                ErrorCategory::Config
            }
            Error::MissingFile(_)
            | Error::MissingColumn(_)
            | Error::BadRow { .. }
            | Error::Data(_)
            | Error::ColumnMismatch { .. }
            | Error::Io(_)
            | Error::Csv(_) => ErrorCategory::Data,
            Error::Singular(_) | Error::NotConverged(_) | Error::Model(_) => {
                ErrorCategory::Modeling
            }
            Error::Stage { source, .. } => source.category(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
