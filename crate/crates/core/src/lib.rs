//! Pricing and matching policies for two-sided platforms.
//!
//! The loss model ([`markov`], [`pricing`], [`optimize`]) controls a
//! birth-death chain of waiting servers through state-dependent prices. The
//! queueing model ([`queue`]) runs a static price with a bi-modal matching
//! rate and is studied by simulation ([`stats`]).

pub mod error;
pub mod golden;
pub mod markov;
pub mod optimize;
pub mod pricing;
pub mod queue;
pub mod stats;

pub use error::{Error, Result};
