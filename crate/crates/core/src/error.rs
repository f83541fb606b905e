use thiserror::Error;

/// Errors raised by the chain, pricing, optimization and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain is not positive recurrent: tail ratio {0} >= 1")]
    NonRecurrent(f64),

    #[error("unnormalized weights overflow at state {state} (log weight {log_weight})")]
    Overflow { state: usize, log_weight: f64 },

    #[error("ratio {value} at state {index} leaves the box [{low}, {high}]")]
    BoundViolation {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("index {0} is not an explicit state of the profile")]
    InvalidIndex(usize),

    #[error("price {price} outside [{p_min}, {p_max}]")]
    PriceOutOfRange { price: f64, p_min: f64, p_max: f64 },

    #[error("rate {rate} outside [{mu_min}, {mu_max}]")]
    RateOutOfRange { rate: f64, mu_min: f64, mu_max: f64 },

    #[error("operation needs a linear demand curve (theta = 1), got theta = {0}")]
    RequiresLinearModel(f64),

    #[error("no price in the box keeps the server queue stable")]
    NoStablePrice,

    #[error("no ratio assignment satisfies the moment cap {0}")]
    Infeasible(f64),

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("required customer rate {required} outside the achievable range [{mu_min}, {mu_max}]")]
    InfeasibleRate {
        required: f64,
        mu_min: f64,
        mu_max: f64,
    },

    #[error("demand exceeds the server rate {0} everywhere on the price domain")]
    InfeasibleDemand(f64),

    #[error("no sign change of the decay equation in (0, {0}]")]
    NoRoot(f64),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("negative rate {0}")]
    NegativeRate(f64),

    #[error("series of length {len} too short for {batches} batches")]
    TooShort { len: usize, batches: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
