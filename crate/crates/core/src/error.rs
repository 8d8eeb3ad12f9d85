use std::path::PathBuf;

use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("query budget {budget} exceeds horizon {horizon}")]
    BudgetExceedsHorizon { budget: u64, horizon: u64 },
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("horizon must be positive")]
    EmptyHorizon,
    #[error("query budget must be positive")]
    EmptyBudget,
    #[error("variation budget {value} outside [{low}, {high}]")]
    VariationOutOfRange { value: f64, low: f64, high: f64 },
    #[error("variation budget is required here")]
    MissingVariation,
    #[error("query budget exhausted ({used} of {cap})")]
    BudgetExhausted { used: u64, cap: u64 },

    #[error("requested changes cannot fit inside [0, 1]: {0}")]
    InfeasibleVariation(String),
    #[error("hard instance is degenerate: batch length {batch_length:.3} >= horizon {horizon}")]
    DegenerateInstance { batch_length: f64, horizon: u64 },
    #[error("mean sequence entry ({t}, {arm}) = {value} outside [0, 1]")]
    MeanOutOfRange { t: u64, arm: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("selection probability must be positive, got {0}")]
    ZeroProbability(f64),
    #[error("arm {arm} out of range for {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },
    #[error("replay distribution is empty")]
    EmptyReplay,

    #[error("fit needs at least 3 points, got {0}")]
    InsufficientPoints(usize),
    #[error("log-log fit needs positive values, got ({0}, {1})")]
    NonPositiveInput(f64, f64),
    #[error("missing columns in {path}: {columns:?}")]
    MissingColumns { path: PathBuf, columns: Vec<String> },

    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("plot rendering failed: {0}")]
    Plot(String),
}

impl Error {
    /// True for errors caused by an invalid configuration rather than I/O.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_) | Error::Plot(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
