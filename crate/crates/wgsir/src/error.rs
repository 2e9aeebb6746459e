use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("ragged dimensions at index {0}")]
    RaggedDimensions(usize),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("need at least {need} observations, found {found}")]
    TooFewObservations { need: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate distance matrix: all pairwise distances are zero")]
    DegenerateDistances,

    #[error("degenerate GCV criterion: trace denominator vanished")]
    DegenerateGcv,

    #[error("covariance matrix not symmetric positive semidefinite: eigenvalue {0}")]
    IndefiniteCovariance(f64),

    #[error("singular covariance")]
    SingularCovariance,

    #[error("Gram matrix violates positive semidefiniteness: eigenvalue {0}")]
    IndefiniteGram(f64),

    #[error("rejection sampling failed after {0} proposals")]
    RejectionFailure(usize),

    #[error("unknown model id: {0}")]
    UnknownModel(String),

    #[error("observation id mismatch: {0}")]
    IdMismatch(String),

    #[error("csv error at row {row}: {message}")]
    CsvData { row: usize, message: String },

    #[error("no data rows")]
    NoDataRows,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Config(String),
}
