use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column '{column}': non-finite value '{value}' is not accepted in a dataset")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: expected {expected} cells, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("target column '{0}' not found in header")]
    MissingTarget(String),

    #[error("column '{0}' appears more than once in header")]
    DuplicateColumn(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("feature columns do not match: expected [{expected}], found [{found}]")]
    ColumnMismatch { expected: String, found: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors that come from reading or validating input data, as
    /// opposed to a bad configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Csv { .. }
                | Error::Parse { .. }
                | Error::NonFinite { .. }
                | Error::Ragged { .. }
                | Error::MissingTarget(_)
                | Error::DuplicateColumn(_)
                | Error::EmptyDataset
                | Error::ColumnMismatch { .. }
                | Error::Shape(_)
        )
    }
}
