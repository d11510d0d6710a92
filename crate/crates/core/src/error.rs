use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("treatment not binary: column `{column}` contains value {value}")]
    TreatmentNotBinary { column: String, value: String },
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("missing or non-numeric covariate value in column `{column}` at data row {row}")]
    MissingCovariate { column: String, row: usize },
    #[error("constant column `{0}` cannot be standardized")]
    ConstantColumn(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("both treatment arms must be non-empty")]
    OneArm,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("propensity score {value} at row {row} is outside (0, 1)")]
    PropensityOutOfRange { row: usize, value: f64 },
    #[error("adaptive weights require an initial unpenalized fit (n = {n}, p = {p})")]
    AdaptiveWeights { n: usize, p: usize },
    #[error("cross-validation fold has a single class in its training part (seed {0})")]
    SingleClassFold(u64),
    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),
    #[error("AIPW-Targ needs the known confounder/predictor sets; it is simulation-only")]
    MissingKnownSets,
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("schema error: missing column `{0}`")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
