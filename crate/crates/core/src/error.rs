use std::path::PathBuf;

/// Everything that can go wrong while ingesting data or clustering it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input contains no points")]
    EmptyInput,

    #[error("points must have at least one feature")]
    ZeroDimension,

    #[error("non-finite coordinate at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("ragged row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric cell at row {row}, column {column}: {cell:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lattice would create {count} seeds (cap {cap}); use a larger separation distance")]
    TooManySeeds { count: u128, cap: usize },

    #[error("no clusters found; decrease L or adjust d_s")]
    NoClusters,

    #[error("covariance matrix is not symmetric positive-definite")]
    NotPositiveDefinite,

    #[error("model artifact: {0}")]
    Artifact(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the input data rather than by parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyInput
                | Error::ZeroDimension
                | Error::NonFinite { .. }
                | Error::RaggedRow { .. }
                | Error::NonNumeric { .. }
                | Error::DimensionMismatch { .. }
                | Error::Json(_)
                | Error::Csv(_)
                | Error::Io { .. }
                | Error::Artifact(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
