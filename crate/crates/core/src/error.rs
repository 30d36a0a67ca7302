use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid word {word:?}: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("element leaves the computed ball of radius {radius}")]
    BallExceeded { radius: usize },

    #[error("prefix length {requested} exceeds word length {length}")]
    PrefixTooLong { requested: usize, length: usize },

    #[error("invalid homomorphism: {0}")]
    InvalidHomomorphism(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("parameter {name} = {value} out of range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("table size cap exceeded: projected {projected} atoms, cap {cap}")]
    TableCapExceeded { projected: u128, cap: u128 },

    #[error("flow network cap exceeded: projected {projected} edges, cap {cap}")]
    EdgeCapExceeded { projected: u128, cap: u128 },

    #[error("table kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: &'static str, found: String },

    #[error("horizon exhausted: level {level} never reached within {horizon} steps")]
    HorizonExhausted { level: f64, horizon: usize },

    #[error("time {time} beyond the ray guard limit {limit}")]
    BeyondGuard { time: usize, limit: f64 },

    #[error("homomorphism is not centered: E φ_*μ = {mean}")]
    NotCentered { mean: f64 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("max-flow solver failure: {0}")]
    FlowFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
