use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid copula specification: {0}")]
    InvalidSpec(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("kendall tau {tau} is not attainable by the {family} family")]
    UnattainableTau { family: String, tau: f64 },

    #[error("column `{column}` has no non-missing training values")]
    GlobalMissing { column: String },

    #[error("cannot parse cell at row {row}, column `{column}`: {value:?}")]
    Parse { row: usize, column: String, value: String },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
