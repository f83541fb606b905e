//! Discrete-time matching of waiting servers and customers under a static
//! price with a bi-modal matching rate.

mod algorithm;
mod arrivals;
mod decay;
mod demand;
mod sim;

pub use algorithm::{
    delta_schedule, match_amount, step, ProfitFn, QueueConfig, QueueConfigBuilder, QueueState, StepOutcome,
    DEFAULT_DECAY_EXPONENT, DEFAULT_EPSILON_REL, DEFAULT_SIGMA_C_SQ, DEFAULT_S_BAR_FACTOR,
};
pub use arrivals::{ArrivalKind, ArrivalProcess};
pub use decay::{poisson_log_mgf, tau_star};
pub use demand::{solve_pstar, CriticalPrice, DemandCurve, DemandForm, PriceRegime};
pub use sim::{profit_upper_bound, simulate, simulate_replications, simulate_stream, SimReport};
