use thiserror::Error;

pub type Result<T> = std::result::Result<T, BtpError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BtpError {
    #[error("dimension mismatch: expected {expected} bits, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sampling oracle budget of {budget} queries exhausted")]
    BudgetExhausted { budget: u64 },

    #[error("unknown user index {index} (population has {users} users)")]
    UnknownUser { index: usize, users: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("exact mode unavailable: {0}")]
    Mode(String),

    #[error("variation coefficient undefined: mean match rate is zero")]
    UndefinedVariation,

    #[error("variation too high: C^2 = {c_squared:.6} is not below delta = {delta}")]
    VariationTooHigh { c_squared: f64, delta: f64 },

    #[error("protocol error: {0}")]
    Protocol(String),
}

impl BtpError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        BtpError::Config(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        BtpError::Contract(msg.into())
    }
}
