use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A CSV cell could not be read. `row` counts data rows from 1 (header excluded).
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing required column `{0}` in header")]
    MissingColumn(String),

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("inconsistent record at row {row}: {message}")]
    Consistency { row: usize, message: String },

    #[error("join produced no overlapping dates")]
    EmptyJoin,

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error("feature `{feature}` is missing on {date}")]
    MissingFeature { date: NaiveDate, feature: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("correlation is undefined: a series is constant")]
    UndefinedCorrelation,

    #[error("metric domain error: {0}")]
    MetricDomain(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("search failed: {0}")]
    Search(String),

    #[error("model format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
