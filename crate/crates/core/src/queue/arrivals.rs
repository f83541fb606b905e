use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{poisson_sample, RngHandle};

/// Per-slot arrival law, parameterized by its mean rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ArrivalKind {
    #[default]
    Poisson,
    /// `rate` units per slot, released as whole units once accumulated.
    Deterministic,
    /// A batch of `size` units with probability `rate/size`.
    BernoulliBatch { size: u32 },
}

/// An arrival stream with its running state.
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    kind: ArrivalKind,
    rate: f64,
    credit: f64,
}

impl ArrivalProcess {
    pub fn new(kind: ArrivalKind, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::ConfigInvalid(format!("arrival rate must be finite and >= 0, got {rate}")));
        }
        if let ArrivalKind::BernoulliBatch { size } = kind {
            if size == 0 || rate > size as f64 {
                return Err(Error::ConfigInvalid(format!(
                    "batch size {size} cannot carry rate {rate}"
                )));
            }
        }
        Ok(Self { kind, rate, credit: 0.0 })
    }

    pub fn kind(&self) -> ArrivalKind {
        self.kind
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sample(&mut self, rng: &mut RngHandle) -> u64 {
        match self.kind {
            ArrivalKind::Poisson => poisson_sample(rng, self.rate).expect("rate validated at construction"),
            ArrivalKind::Deterministic => {
                self.credit += self.rate;
                let whole = self.credit.floor();
                self.credit -= whole;
                whole as u64
            }
            ArrivalKind::BernoulliBatch { size } => {
                if rng.uniform() < self.rate / size as f64 {
                    size as u64
                } else {
                    0
                }
            }
        }
    }

    /// Long-run variance rate of the cumulative count.
    pub fn variance_rate(&self) -> f64 {
        match self.kind {
            ArrivalKind::Poisson => self.rate,
            ArrivalKind::Deterministic => 0.0,
            ArrivalKind::BernoulliBatch { size } => {
                let k = size as f64;
                let q = self.rate / k;
                k * k * q * (1.0 - q)
            }
        }
    }

    /// Per-slot log moment generating function `ln E[e^{sX}]`.
    pub fn log_mgf(&self, s: f64) -> f64 {
        match self.kind {
            ArrivalKind::Poisson => self.rate * s.exp_m1(),
            ArrivalKind::Deterministic => self.rate * s,
            ArrivalKind::BernoulliBatch { size } => {
                let q = self.rate / size as f64;
                (q * (size as f64 * s).exp_m1()).ln_1p()
            }
        }
    }
}
