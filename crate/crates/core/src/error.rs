use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("empty input: no sample rows")]
    EmptyInput,

    #[error("point {index} lies outside the grid support")]
    OutOfSupport { index: usize },

    #[error("point {point:?} lies outside the grid support")]
    PointOutside { point: Vec<f64> },

    #[error("{count} point(s) outside the occupied support, first indices: {indices:?}")]
    OutOfSupportMany { count: usize, indices: Vec<usize> },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("transportation problem is infeasible at level {level}: {diagnostic}")]
    Infeasible { level: usize, diagnostic: String },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("simplex iteration limit ({0}) exceeded")]
    IterationLimit(usize),

    #[error("pairwise solve against marginal {marginal} failed: {source}")]
    Marginal {
        marginal: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.into())
    }
}
