use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("mixture weights sum to {sum}, expected 1")]
    WeightSum { sum: f64 },

    #[error("invalid component parameters: {0}")]
    InvalidComponent(String),

    #[error("unknown target case `{0}` (expected case1..case6)")]
    UnknownCase(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state outside support: density is zero at both {state} and proposal {proposal}")]
    OutsideSupport { state: f64, proposal: f64 },

    #[error("coalescence not reached within {cap} steps")]
    CoalescenceNotReached { cap: u64 },

    #[error("CFTP did not coalesce within {doublings} doublings (randomness log holds {log_len} steps)")]
    CftpBudget { doublings: u32, log_len: usize },

    #[error("block budget of {max_blocks} exhausted after {samples} of {requested} samples")]
    BlockBudget {
        max_blocks: u64,
        samples: usize,
        requested: usize,
    },

    #[error("empty input")]
    EmptyInput,
}

pub type Result<T> = std::result::Result<T, Error>;
