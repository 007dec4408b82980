use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no crops")]
    NoCrops,

    #[error("unnormalized scores: row {row} sums to {sum}")]
    Unnormalized { row: usize, sum: f64 },

    #[error("empty event class {0}")]
    EmptyEventClass(usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("self pair: class {0} correlated with itself")]
    SelfPair(usize),

    #[error("constraint violated: expected {expected} selected classes, got {got}")]
    ConstraintViolated { expected: usize, got: usize },

    #[error("class {0} is already selected")]
    AlreadySelected(usize),

    #[error("insufficient classes: requested {requested}, only {available} usable")]
    InsufficientClasses { requested: usize, available: usize },

    #[error("instance too large for oracle: {classes} classes, {subsets} subsets")]
    OracleTooLarge { classes: usize, subsets: u128 },

    #[error("divergence at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("heads not sharing trunk")]
    HeadsNotSharingTrunk,

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("image too small after resize: side {side} < crop {crop}")]
    ImageTooSmall { side: usize, crop: usize },

    #[error("region out of bounds: {0}")]
    OutOfBounds(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("missing soft target row {0}")]
    MissingSoftTarget(usize),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
