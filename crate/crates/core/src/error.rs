use thiserror::Error;

/// Errors produced across the surveillance pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph order must be at least 2, got {0}")]
    InvalidOrder(usize),

    #[error("self-loop rejected at node {0}")]
    SelfLoopRejected(usize),

    #[error("node index ({i}, {j}) out of range for order {n}")]
    IndexError { i: usize, j: usize, n: usize },

    #[error("edge list contains no usable edges ({dropped_self_loops} self-loops dropped)")]
    EmptyIngest { dropped_self_loops: usize },

    #[error("time labels are not contiguous; missing {missing:?}")]
    NonContiguousSeries { missing: Vec<i64> },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("term set contains a stability term but no predecessor graph was supplied")]
    MissingPredecessor,

    #[error("graph orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),

    #[error("invalid term set: {0}")]
    InvalidTermSet(String),

    #[error("pseudolikelihood fit did not converge after {iterations} iterations: {reason}")]
    NonConvergence {
        iterations: usize,
        reason: String,
        log: Vec<String>,
    },

    #[error("window of {got} graphs is too short; need at least {need}")]
    WindowTooShort { got: usize, need: usize },

    #[error("transition matrix has no unique stationary distribution")]
    NoUniqueStationary,

    #[error("invalid anomaly: {0}")]
    InvalidAnomaly(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is singular or ill-conditioned: {0}")]
    SingularCovariance(String),

    #[error("could not bracket the control limit after {doublings} expansions (ARL at {hi} was {arl})")]
    BracketFailure { doublings: usize, hi: f64, arl: f64 },

    #[error("all {0} replications were discarded as false alarms")]
    NoValidRuns(usize),

    #[error("autocorrelation undefined for a constant series")]
    UndefinedAcf,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
