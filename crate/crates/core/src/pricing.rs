//! Loss-model pricing: demand curve, state-dependent price policies, and the
//! two objectives.
//!
//! Servers arrive at rate `λ`; with `i` servers waiting the platform posts
//! `p_i` and customers arrive at rate `g(p_i) = (β - αp_i)^θ`. A customer
//! arriving to an empty system is lost. The original objective averages the
//! price over departures, `C = Σ_{i≥1} π_{i-1} p_i - w E[N]`; the relaxed one
//! averages it under the stationary law, `C_rel = Σ_{i≥0} π_i p_i - w E[N]`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::markov::{stationary_truncated, RhoProfile, StationaryDist, DEFAULT_TOL};

const RANGE_SLACK: f64 = 1e-12;

/// Demand curve, price box, server rate and holding weight of the loss model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceModel {
    alpha: f64,
    beta: f64,
    theta: f64,
    p_min: f64,
    p_max: f64,
    lambda: f64,
    w: f64,
}

impl PriceModel {
    pub fn new(
        alpha: f64,
        beta: f64,
        theta: f64,
        p_min: f64,
        p_max: f64,
        lambda: f64,
        w: f64,
    ) -> Result<Self> {
        let finite = [alpha, beta, theta, p_min, p_max, lambda, w]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("model", "all parameters must be finite"));
        }
        if alpha <= 0.0 || beta <= 0.0 {
            return Err(invalid("alpha/beta", "demand slope and intercept must be positive"));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(invalid("theta", format!("must lie in (0, 1], got {theta}")));
        }
        if !(0.0 < p_min && p_min < p_max && p_max < beta / alpha) {
            return Err(invalid(
                "price box",
                format!("need 0 < p_min < p_max < beta/alpha, got [{p_min}, {p_max}]"),
            ));
        }
        if lambda <= 0.0 {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if w <= 0.0 {
            return Err(invalid("w", format!("must be positive, got {w}")));
        }
        let model = Self {
            alpha,
            beta,
            theta,
            p_min,
            p_max,
            lambda,
            w,
        };
        if model.mu_max() <= lambda {
            return Err(invalid(
                "lambda",
                format!("mu_max = {} must exceed lambda = {lambda}", model.mu_max()),
            ));
        }
        Ok(model)
    }

    /// `g(p) = β - αp`.
    pub fn linear(alpha: f64, beta: f64, p_min: f64, p_max: f64, lambda: f64, w: f64) -> Result<Self> {
        Self::new(alpha, beta, 1.0, p_min, p_max, lambda, w)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn p_min(&self) -> f64 {
        self.p_min
    }
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn w(&self) -> f64 {
        self.w
    }

    /// Holding weight per unit sojourn time, `w̃ = wλ`.
    pub fn w_tilde(&self) -> f64 {
        self.w * self.lambda
    }

    pub fn is_linear(&self) -> bool {
        self.theta == 1.0
    }

    /// `g(p_max)`.
    pub fn mu_min(&self) -> f64 {
        self.g(self.p_max)
    }

    /// `g(p_min)`.
    pub fn mu_max(&self) -> f64 {
        self.g(self.p_min)
    }

    /// `β/α`, an upper bound on either objective.
    pub fn price_ceiling(&self) -> f64 {
        self.beta / self.alpha
    }

    /// Demand at `p` without range checks.
    pub fn g(&self, p: f64) -> f64 {
        let base = self.beta - self.alpha * p;
        if self.theta == 1.0 {
            base
        } else {
            base.max(0.0).powf(self.theta)
        }
    }

    /// Price that yields rate `mu`, without range checks.
    pub fn g_inv(&self, mu: f64) -> f64 {
        let base = if self.theta == 1.0 { mu } else { mu.powf(1.0 / self.theta) };
        (self.beta - base) / self.alpha
    }

    /// Returns a copy with a different holding weight.
    pub fn with_w(&self, w: f64) -> Result<Self> {
        Self::new(self.alpha, self.beta, self.theta, self.p_min, self.p_max, self.lambda, w)
    }

    fn check_price(&self, p: f64) -> Result<()> {
        let slack = RANGE_SLACK * self.p_max;
        if p.is_finite() && p >= self.p_min - slack && p <= self.p_max + slack {
            Ok(())
        } else {
            Err(Error::PriceOutOfRange {
                price: p,
                p_min: self.p_min,
                p_max: self.p_max,
            })
        }
    }
}

/// Customer arrival rate at price `p`.
pub fn g_eval(model: &PriceModel, p: f64) -> Result<f64> {
    model.check_price(p)?;
    Ok(model.g(p))
}

/// Price at which customers arrive at rate `mu`.
pub fn g_inverse(model: &PriceModel, mu: f64) -> Result<f64> {
    let (lo, hi) = (model.mu_min(), model.mu_max());
    let slack = RANGE_SLACK * hi;
    if !(mu.is_finite() && mu >= lo - slack && mu <= hi + slack) {
        return Err(Error::RateOutOfRange {
            rate: mu,
            mu_min: lo,
            mu_max: hi,
        });
    }
    Ok(model.g_inv(mu))
}

/// Pricing rule per server-count state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Policy {
    /// One price in every state, including the empty one.
    Static(f64),
    /// Threshold rule parameterized by `x >= 0`: `p_max` below `⌈x⌉`, `p_min`
    /// above it, and `p_max - (⌈x⌉ - x)(p_max - p_min)` at `⌈x⌉`.
    BangBang(f64),
    /// Prices for states `1, 2, …`; the last entry repeats forever and the
    /// empty state uses `p_max`.
    Tabular(Vec<f64>),
}

/// Prices `p_0`, `p_1..=p_k`, then a constant price for every `i > k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSchedule {
    pub p0: f64,
    pub explicit: Vec<f64>,
    pub tail: f64,
}

impl PriceSchedule {
    pub fn price(&self, i: usize) -> f64 {
        match i {
            0 => self.p0,
            i if i <= self.explicit.len() => self.explicit[i - 1],
            _ => self.tail,
        }
    }
}

impl Policy {
    /// Static price, rejected unless it keeps the server queue stable.
    pub fn static_price(model: &PriceModel, p: f64) -> Result<Self> {
        let policy = Policy::Static(p);
        policy.validate(model)?;
        Ok(policy)
    }

    pub fn bang_bang(x: f64) -> Result<Self> {
        if x >= 0.0 && x.is_finite() {
            Ok(Policy::BangBang(x))
        } else {
            Err(invalid("x", format!("must be finite and non-negative, got {x}")))
        }
    }

    pub fn tabular(model: &PriceModel, prices: Vec<f64>) -> Result<Self> {
        let policy = Policy::Tabular(prices);
        policy.validate(model)?;
        Ok(policy)
    }

    /// `(ℓ*, p_{ℓ*})` of a bang-bang rule.
    pub fn threshold(&self, model: &PriceModel) -> Option<(usize, f64)> {
        match *self {
            Policy::BangBang(x) => {
                let ell = x.ceil();
                let p = model.p_max - (ell - x) * (model.p_max - model.p_min);
                Some((ell as usize, p))
            }
            _ => None,
        }
    }

    pub fn schedule(&self, model: &PriceModel) -> PriceSchedule {
        match self {
            Policy::Static(p) => PriceSchedule {
                p0: *p,
                explicit: Vec::new(),
                tail: *p,
            },
            Policy::BangBang(_) => {
                let (ell, p_ell) = self.threshold(model).unwrap();
                if ell == 0 {
                    PriceSchedule {
                        p0: p_ell,
                        explicit: Vec::new(),
                        tail: model.p_min,
                    }
                } else {
                    let mut explicit = vec![model.p_max; ell - 1];
                    explicit.push(p_ell);
                    PriceSchedule {
                        p0: model.p_max,
                        explicit,
                        tail: model.p_min,
                    }
                }
            }
            Policy::Tabular(prices) => PriceSchedule {
                p0: model.p_max,
                explicit: prices.clone(),
                tail: *prices.last().unwrap_or(&model.p_max),
            },
        }
    }

    /// Checks prices against the box and the tail price against recurrence.
    pub fn validate(&self, model: &PriceModel) -> Result<()> {
        if let Policy::BangBang(x) = self {
            Policy::bang_bang(*x)?;
        }
        if let Policy::Tabular(prices) = self {
            if prices.is_empty() {
                return Err(invalid("prices", "tabular policy needs at least one price"));
            }
        }
        let s = self.schedule(model);
        model.check_price(s.p0)?;
        for &p in &s.explicit {
            model.check_price(p)?;
        }
        model.check_price(s.tail)?;
        let tail_rho = model.lambda / model.g(s.tail);
        if tail_rho >= 1.0 {
            return Err(Error::NonRecurrent(tail_rho));
        }
        Ok(())
    }
}

/// Ratio profile `ρ_i = λ / g(p_i)` induced by a policy.
pub fn policy_rates(model: &PriceModel, policy: &Policy) -> Result<RhoProfile> {
    policy.validate(model)?;
    let s = policy.schedule(model);
    let ratio = |p: f64| model.lambda / model.g(p);
    let rho = s.explicit.iter().map(|&p| ratio(p)).collect();
    let bounds = (model.lambda / model.mu_max(), model.lambda / model.mu_min());
    RhoProfile::new(rho, Some(ratio(s.tail)), bounds)
}

/// Both objectives plus the stationary quantities they are built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectivePair {
    pub c: f64,
    pub c_rel: f64,
    pub pi0: f64,
    pub mean_n: f64,
    /// Mean server sojourn `E[T] = E[N]/λ`.
    pub mean_sojourn: f64,
}

/// Stationary law of the chain a policy induces.
pub fn policy_stationary(model: &PriceModel, policy: &Policy) -> Result<StationaryDist> {
    stationary_truncated(&policy_rates(model, policy)?, DEFAULT_TOL)
}

pub fn evaluate(model: &PriceModel, policy: &Policy) -> Result<ObjectivePair> {
    let dist = policy_stationary(model, policy)?;
    let s = policy.schedule(model);
    let k = s.explicit.len();
    debug_assert_eq!(dist.last_explicit(), k);
    let pi = dist.pi();
    let tail_mass = dist.tail_mass();
    let mean_n = dist.mean();

    let mut revenue_rel = pi[0] * s.p0;
    let mut revenue_c = 0.0;
    for i in 1..=k {
        revenue_rel += pi[i] * s.explicit[i - 1];
        revenue_c += pi[i - 1] * s.explicit[i - 1];
    }
    // departures from states beyond k leave behind k, k+1, …
    revenue_c += pi[k] * s.tail;
    revenue_rel += s.tail * tail_mass;
    revenue_c += s.tail * tail_mass;

    let holding = model.w * mean_n;
    Ok(ObjectivePair {
        c: revenue_c - holding,
        c_rel: revenue_rel - holding,
        pi0: dist.pi0(),
        mean_n,
        mean_sojourn: mean_n / model.lambda,
    })
}

/// `C_rel = Σ_{i≥0} π_i p_i - w Σ i π_i`.
pub fn objective_crel(model: &PriceModel, policy: &Policy) -> Result<f64> {
    Ok(evaluate(model, policy)?.c_rel)
}

/// `C = Σ_{i≥1} π_{i-1} p_i - w Σ i π_i`.
pub fn objective_c(model: &PriceModel, policy: &Policy) -> Result<f64> {
    Ok(evaluate(model, policy)?.c)
}

/// Relaxed objective through the linear-demand identity
/// `(β - π_0 μ_0 - λ)/α - w E[N]`, where `μ_0 = g(p_0)` is the demand at the
/// policy's empty-state price.
pub fn lemma1_value(model: &PriceModel, policy: &Policy) -> Result<f64> {
    if !model.is_linear() {
        return Err(Error::RequiresLinearModel(model.theta));
    }
    let dist = policy_stationary(model, policy)?;
    let mu0 = model.g(policy.schedule(model).p0);
    Ok((model.beta - dist.pi0() * mu0 - model.lambda) / model.alpha - model.w * dist.mean())
}
