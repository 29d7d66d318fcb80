use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: duplicate observation for {country}/{year}")]
    DuplicateObservation { line: u64, country: String, year: i32 },

    #[error("line {line}, column `{column}`: cannot parse {value:?} as a number")]
    BadCell { line: u64, column: String, value: String },

    #[error("missing column `{0}` in header")]
    MissingColumn(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("no usable (t, t+1) pairs in panel")]
    EmptyDesign,

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular design, collinear columns: {0:?}")]
    SingularDesign(Vec<String>),

    #[error("empty partition: {0}")]
    EmptyPartition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the input data rather than by parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::DuplicateObservation { .. }
                | Error::BadCell { .. }
                | Error::MissingColumn(_)
                | Error::Csv(_)
                | Error::EmptyDesign
                | Error::Degenerate(_)
                | Error::SingularDesign(_)
                | Error::EmptyPartition(_)
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
