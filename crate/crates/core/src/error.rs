use thiserror::Error;

use crate::barycenter::BarycenterResult;
use crate::distances::DistanceKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has zero dimension")]
    EmptyMatrix,

    #[error("matrix is not symmetric (largest asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error(
        "matrix is not positive semidefinite (eigenvalue {eigenvalue:e}, largest {largest:e})"
    )]
    NotPsd { eigenvalue: f64, largest: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-positive price {value} ({context})")]
    NonPositivePrice { value: f64, context: String },

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("barycenter iterate became singular at iteration {iteration}")]
    SingularIterate { iteration: usize },

    #[error(
        "barycenter did not converge after {} iterations (residual {:e})",
        best.iterations,
        best.residual
    )]
    NoConvergence { best: Box<BarycenterResult> },

    #[error("k = {k} exceeds the number of items ({n})")]
    KTooLarge { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label arrays differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("distance kind {0:?} is not supported for this operation")]
    UnsupportedKind(DistanceKind),

    #[error("schema error: {0}")]
    Schema(String),

    #[error(
        "insufficient days for station {station}, {year}-{month:02}: {got} valid rows, need 28"
    )]
    InsufficientDays {
        station: String,
        year: i32,
        month: u32,
        got: usize,
    },

    #[error("ticker {ticker} has only {got} rows (need at least 3)")]
    TooFewRows { ticker: String, got: usize },

    #[error("ticker {0} has no ground-truth class")]
    UnknownTicker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
    pub fn is_numerics(&self) -> bool {
        matches!(
            self,
            Error::NotSymmetric { .. }
                | Error::NotPsd { .. }
                | Error::SingularIterate { .. }
                | Error::NoConvergence { .. }
                | Error::EmptyCluster(_)
        )
    }
}
