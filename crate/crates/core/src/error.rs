use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems with tabular input. Row numbers count data rows from 1
/// (the header is not a row).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("input is empty (no header row)")]
    Empty,
    #[error("no data rows")]
    NoRows,
    #[error("no feature columns")]
    NoFeatures,
    #[error("last column must be named \"label\", found \"{found}\"")]
    MissingLabelColumn { found: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column \"{column}\": missing value")]
    MissingValue { row: usize, column: String },
    #[error("row {row}, column \"{column}\": cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column \"{column}\": value {value:?} is not finite")]
    NonFinite {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column \"label\": label {value:?} is not 0 or 1")]
    BadLabel { row: usize, value: String },
    #[error("features have {found} columns, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model file at byte {offset}: {message}")]
    ModelFormat { offset: usize, message: String },

    #[error("unsupported model format_version {found} (expected {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
