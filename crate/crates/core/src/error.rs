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

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("timestamps are not strictly increasing at row {row} ({date})")]
    NonIncreasingTimestamps { row: usize, date: String },

    #[error("non-positive price {value} for {ticker} at row {row}")]
    NonPositivePrice { ticker: String, row: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("asset {ticker} has {observed} observed prices, at least 2 are required")]
    InsufficientObservations { ticker: String, observed: usize },

    #[error("panel still contains missing prices for {0}")]
    MissingValues(String),

    #[error("cross-sectional volatility is zero at time index {0}")]
    ZeroCrossSectionalVolatility(usize),

    #[error("asset {0} has zero variance")]
    ZeroVariance(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is singular (smallest eigenvalue {0:e})")]
    Singular(f64),

    #[error("gain quadratic form g'M^-1 g = {0:e} is not positive")]
    NonPositiveGainForm(f64),

    #[error("node {0} has no incident edges")]
    IsolatedNode(usize),

    #[error("k-means left an empty cluster after {0} re-seeded rounds")]
    EmptyCluster(usize),

    #[error("cannot aggregate an empty series")]
    EmptySeries,

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures of the numerics (singular systems, degenerate data)
    /// as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroCrossSectionalVolatility(_)
                | Error::ZeroVariance(_)
                | Error::NotSymmetric(_)
                | Error::Singular(_)
                | Error::NonPositiveGainForm(_)
                | Error::IsolatedNode(_)
                | Error::EmptyCluster(_)
        )
    }
}
