use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DpaError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("instance too large for exhaustive search: {size} > cap {cap}")]
    InstanceTooLarge { size: usize, cap: usize },

    #[error("algorithm {algorithm} accepted blocked request {request}")]
    IllegalAcceptance { algorithm: String, request: String },

    #[error("inconsistent priority order: {0}")]
    InvalidOrder(String),

    #[error("advice exhausted: wanted {wanted} bits at position {position} of {length}")]
    AdviceExhausted {
        wanted: usize,
        position: usize,
        length: usize,
    },

    #[error("malformed advice: {0}")]
    MalformedAdvice(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = DpaError> = std::result::Result<T, E>;
