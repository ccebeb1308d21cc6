use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-increasing x at node {index}")]
    NonIncreasing { index: usize },

    #[error("value {value} outside domain [{lo}, {hi}]")]
    OutOfDomain {
        value: String,
        lo: String,
        hi: String,
    },

    #[error("a map needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("malformed node {index}: {msg}")]
    BadNode { index: usize, msg: String },

    #[error("one-sided value undefined: {0}")]
    UndefinedSide(String),

    #[error("domain mismatch")]
    DomainMismatch,

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("map is not piecewise strictly monotone: {0}")]
    NotPsm(String),

    #[error("entropy not positive")]
    EntropyNotPositive,

    #[error("discontinuous input")]
    Discontinuous,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("inconsistent graph map: {0}")]
    Graph(String),
}

pub type Result<T> = std::result::Result<T, Error>;
