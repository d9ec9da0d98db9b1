use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular design (reciprocal condition {rcond:.3e})")]
    SingularDesign { rcond: f64 },

    #[error("IRLS did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("perfect separation (max |beta| = {max_abs_beta:.3})")]
    PerfectSeparation { max_abs_beta: f64 },

    #[error("degenerate variance for coefficient {index}")]
    DegenerateVariance { index: usize },

    #[error("complete-case subset too small: {observed} observed rows, need {required}")]
    EmptyCompleteCase { observed: usize, required: usize },

    #[error("surrogate predictions are required but missing")]
    MissingSurrogate,

    #[error("outcome is not fully observed")]
    MissingOutcome,

    #[error("method requires a linear outcome family")]
    NotLinearFamily,

    #[error("surrogate is collinear with the design (reciprocal condition {rcond:.3e})")]
    SurrogateCollinear { rcond: f64 },

    #[error("subset too small: {0}")]
    SubsetTooSmall(String),

    #[error("tuning matrix is ill-conditioned")]
    IllConditionedTheta,

    #[error("observation model setting {spec} does not match frame setting {frame}")]
    SettingMismatch { spec: String, frame: String },

    #[error("surrogate {kind} is incompatible with a {family} outcome")]
    IncompatibleSurrogate { kind: String, family: String },

    #[error("all values identical; ranks are degenerate")]
    DegenerateRanks,

    #[error("too few donors: {available} observed rows, need {required}")]
    TooFewDonors { available: usize, required: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("unknown method identifier `{0}`")]
    UnknownMethod(String),

    #[error("unknown grid `{0}`")]
    UnknownGrid(String),

    #[error("power requested but no null-twin p-values supplied")]
    MissingNullTwin,

    #[error("parse: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
