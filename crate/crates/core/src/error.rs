use thiserror::Error;

/// Errors raised by the fitting library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape parameter must be positive and finite, got {0}")]
    InvalidShape(f64),

    #[error("value {value} is outside the domain of {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("linear predictor {eta} at row {row} is not positive; derivatives are undefined")]
    NonPositivePredictor { row: usize, eta: f64 },

    #[error("analytic derivatives are only available for the Weibull links, not {0}")]
    UnsupportedLink(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("matrix is singular or not negative definite: {0}")]
    Singular(String),

    #[error("invalid data at row {row}, column `{column}`: {reason}")]
    Data {
        row: usize,
        column: String,
        reason: String,
    },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid prior: {0}")]
    Prior(String),

    #[error("initial point has zero posterior density; start from the MLE initializer")]
    ImpossibleStart,

    #[error("posterior mean lies where the likelihood is zero: {0}")]
    DegeneratePosteriorMean(String),

    #[error("fit on component {component} failed: {source}")]
    Component {
        component: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    Mismatch(String),

    #[error("unknown builtin dataset `{0}`")]
    UnknownDataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
