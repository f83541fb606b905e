use thiserror::Error;

use twosided::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::ConfigInvalid(_)
            | CoreError::InvalidParameter { .. }
            | CoreError::PriceOutOfRange { .. }
            | CoreError::RateOutOfRange { .. }
            | CoreError::RequiresLinearModel(_)
            | CoreError::NonRecurrent(_)
            | CoreError::NoStablePrice
            | CoreError::InfeasibleDemand(_)
            | CoreError::InfeasibleRate { .. }
            | CoreError::BoundViolation { .. }
            | CoreError::InvalidIndex(_)
            | CoreError::NegativeRate(_)
            | CoreError::TooShort { .. } => CliError::Config(e.to_string()),
            CoreError::Overflow { .. }
            | CoreError::Infeasible(_)
            | CoreError::PreconditionViolation(_)
            | CoreError::NoRoot(_) => CliError::Numerical(e.to_string()),
        }
    }
}
