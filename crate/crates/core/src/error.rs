use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid test channel: {0}")]
    InvalidChannel(String),

    #[error("invalid distortion measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The slope search could not straddle the requested distortion.
    #[error(
        "target distortion {target} outside the reachable range [{achieved_min}, {achieved_max}] \
         for lambda up to {lambda_max}"
    )]
    BracketFailure {
        target: f64,
        achieved_min: f64,
        achieved_max: f64,
        lambda_max: f64,
    },

    #[error("dual variables infeasible: output letter {letter} has constraint value {value}")]
    InfeasibleDual { letter: usize, value: f64 },

    #[error("outside the closed-form regime: letter {letter} gets output mass {value} ({detail})")]
    RegimeViolation {
        letter: usize,
        value: f64,
        detail: String,
    },

    #[error("no positive root: {0}")]
    NoPositiveRoot(String),

    /// A column with zero distortion for every source letter makes R(D) vanish.
    #[error("rate-distortion function is identically zero: column {column} is all zeros")]
    TrivialMeasure { column: usize },

    #[error("cannot balance source: {0}")]
    InfeasibleSeed(String),
}
