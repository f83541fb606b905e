use serde::{Deserialize, Serialize};

use super::arrivals::ArrivalKind;
use super::demand::{solve_pstar, CriticalPrice, DemandCurve, PriceRegime};
use crate::error::{Error, Result};

/// Non-decreasing concave utility applied to per-slot revenue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfitFn {
    #[default]
    Identity,
    Log1p,
}

impl ProfitFn {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ProfitFn::Identity => x,
            ProfitFn::Log1p => x.ln_1p(),
        }
    }
}

/// `δ = decay_exponent · σ² · ln U / U`.
pub fn delta_schedule(u: f64, decay_exponent: f64, sigma_c_sq: f64) -> f64 {
    decay_exponent * sigma_c_sq * u.ln() / u
}

/// Matching amount for `n` matchable pairs: nothing below `μ* - δ`, the low
/// mode up to `U/2`, the high mode above.
pub fn match_amount(n: f64, mu_star: f64, delta: f64, u: f64) -> f64 {
    let low = mu_star - delta;
    let m = if n < low {
        0.0
    } else if n <= 0.5 * u {
        low
    } else {
        mu_star + delta
    };
    m.min(n)
}

pub const DEFAULT_DECAY_EXPONENT: f64 = 2.0;
pub const DEFAULT_SIGMA_C_SQ: f64 = 2.0;
pub const DEFAULT_EPSILON_REL: f64 = 1e-3;
pub const DEFAULT_S_BAR_FACTOR: f64 = 4.0;

/// Validated parameters of the bi-modal matcher.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueConfig {
    lambda: f64,
    demand: DemandCurve,
    u: f64,
    s_bar: f64,
    decay_exponent: f64,
    sigma_c_sq: f64,
    delta: f64,
    epsilon: f64,
    profit_fn: ProfitFn,
    server_arrivals: ArrivalKind,
    customer_arrivals: ArrivalKind,
    critical: CriticalPrice,
    p_eff: f64,
}

/// Builder for [`QueueConfig`]; unset fields take the documented defaults.
#[derive(Debug, Clone)]
pub struct QueueConfigBuilder {
    lambda: f64,
    demand: DemandCurve,
    u: f64,
    s_bar: Option<f64>,
    decay_exponent: f64,
    sigma_c_sq: f64,
    delta: Option<f64>,
    epsilon_rel: f64,
    profit_fn: ProfitFn,
    server_arrivals: ArrivalKind,
    customer_arrivals: ArrivalKind,
}

impl QueueConfigBuilder {
    pub fn s_bar(mut self, s_bar: f64) -> Self {
        self.s_bar = Some(s_bar);
        self
    }

    pub fn decay_exponent(mut self, beta: f64) -> Self {
        self.decay_exponent = beta;
        self
    }

    pub fn sigma_c_sq(mut self, sigma_sq: f64) -> Self {
        self.sigma_c_sq = sigma_sq;
        self
    }

    /// Overrides the scheduled `δ`.
    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    /// `ε` as a fraction of `p*`.
    pub fn epsilon_rel(mut self, eps: f64) -> Self {
        self.epsilon_rel = eps;
        self
    }

    pub fn profit_fn(mut self, v: ProfitFn) -> Self {
        self.profit_fn = v;
        self
    }

    pub fn server_arrivals(mut self, kind: ArrivalKind) -> Self {
        self.server_arrivals = kind;
        self
    }

    pub fn customer_arrivals(mut self, kind: ArrivalKind) -> Self {
        self.customer_arrivals = kind;
        self
    }

    pub fn build(self) -> Result<QueueConfig> {
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        if !(self.u > 1.0 && self.u.is_finite()) {
            return bad(format!("U must exceed 1, got {}", self.u));
        }
        if !(self.decay_exponent >= 2.0 && self.decay_exponent.is_finite()) {
            return bad(format!("decay exponent must be >= 2, got {}", self.decay_exponent));
        }
        if !(self.sigma_c_sq > 0.0 && self.sigma_c_sq.is_finite()) {
            return bad(format!("sigma_c_sq must be positive, got {}", self.sigma_c_sq));
        }
        if !(self.epsilon_rel > 0.0 && self.epsilon_rel.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon_rel));
        }
        let s_bar = self.s_bar.unwrap_or(DEFAULT_S_BAR_FACTOR * self.u);
        if !(s_bar > self.u && s_bar.is_finite()) {
            return bad(format!("s_bar {s_bar} must exceed U = {}", self.u));
        }
        let critical = solve_pstar(&self.demand, self.lambda)?;
        let mu_star = critical.mu_star;
        let delta = self
            .delta
            .unwrap_or_else(|| delta_schedule(self.u, self.decay_exponent, self.sigma_c_sq));
        if !(delta > 0.0 && delta < mu_star) {
            return bad(format!("delta {delta} must lie in (0, mu* = {mu_star})"));
        }
        if 0.5 * self.u < mu_star + delta {
            return bad(format!(
                "U/2 = {} is below the high-mode match mu* + delta = {}",
                0.5 * self.u,
                mu_star + delta
            ));
        }
        let (p_eff, epsilon) = match critical.regime {
            PriceRegime::Slack => (critical.p_star, 0.0),
            PriceRegime::Equality => {
                let eps = self.epsilon_rel * critical.p_star;
                (critical.p_star + eps, eps)
            }
        };
        let customer_rate = self.demand.mu(p_eff);
        if customer_rate <= mu_star - delta {
            return bad(format!(
                "customer rate {customer_rate} at price {p_eff} does not exceed the low-mode match {}",
                mu_star - delta
            ));
        }
        Ok(QueueConfig {
            lambda: self.lambda,
            demand: self.demand,
            u: self.u,
            s_bar,
            decay_exponent: self.decay_exponent,
            sigma_c_sq: self.sigma_c_sq,
            delta,
            epsilon,
            profit_fn: self.profit_fn,
            server_arrivals: self.server_arrivals,
            customer_arrivals: self.customer_arrivals,
            critical,
            p_eff,
        })
    }
}

impl QueueConfig {
    pub fn builder(lambda: f64, demand: DemandCurve, u: f64) -> QueueConfigBuilder {
        QueueConfigBuilder {
            lambda,
            demand,
            u,
            s_bar: None,
            decay_exponent: DEFAULT_DECAY_EXPONENT,
            sigma_c_sq: DEFAULT_SIGMA_C_SQ,
            delta: None,
            epsilon_rel: DEFAULT_EPSILON_REL,
            profit_fn: ProfitFn::Identity,
            server_arrivals: ArrivalKind::Poisson,
            customer_arrivals: ArrivalKind::Poisson,
        }
    }

    /// Demand `μ(p) = 2μ* - p` with server rate `μ* + gap`, so that the
    /// critical price and rate both equal `μ*`.
    pub fn with_target_rate(mu_star: f64, gap: f64, u: f64) -> Result<QueueConfigBuilder> {
        if !(gap > 0.0) {
            return Err(Error::ConfigInvalid(format!("gap must be positive, got {gap}")));
        }
        Ok(Self::builder(mu_star + gap, DemandCurve::linear(2.0 * mu_star, 1.0)?, u))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn demand(&self) -> &DemandCurve {
        &self.demand
    }
    pub fn u(&self) -> f64 {
        self.u
    }
    pub fn s_bar(&self) -> f64 {
        self.s_bar
    }
    pub fn decay_exponent(&self) -> f64 {
        self.decay_exponent
    }
    pub fn sigma_c_sq(&self) -> f64 {
        self.sigma_c_sq
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn profit_fn(&self) -> ProfitFn {
        self.profit_fn
    }
    pub fn server_arrivals(&self) -> ArrivalKind {
        self.server_arrivals
    }
    pub fn customer_arrivals(&self) -> ArrivalKind {
        self.customer_arrivals
    }
    pub fn critical(&self) -> CriticalPrice {
        self.critical
    }
    pub fn p_star(&self) -> f64 {
        self.critical.p_star
    }
    pub fn mu_star(&self) -> f64 {
        self.critical.mu_star
    }
    /// Price actually charged: `p*`, or `p* + ε` when the rate constraint binds.
    pub fn p_eff(&self) -> f64 {
        self.p_eff
    }
    /// Customer arrival rate at the charged price.
    pub fn customer_rate(&self) -> f64 {
        self.demand.mu(self.p_eff)
    }
}

/// Queue contents at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct QueueState {
    /// Waiting servers.
    pub s: f64,
    /// Waiting customers.
    pub q_c: f64,
    pub t: u64,
}

impl QueueState {
    pub fn n(&self) -> f64 {
        self.s.min(self.q_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next: QueueState,
    pub matched: f64,
    pub profit: f64,
}

/// One slot: match from the current contents, then add `a` servers and `b`
/// customers; servers beyond `S̄` are turned away.
pub fn step(state: QueueState, a: u64, b: u64, cfg: &QueueConfig) -> StepOutcome {
    let m = match_amount(state.n(), cfg.mu_star(), cfg.delta(), cfg.u());
    let s = (state.s + a as f64 - m).max(0.0).min(cfg.s_bar());
    let q_c = (state.q_c + b as f64 - m).max(0.0);
    StepOutcome {
        next: QueueState { s, q_c, t: state.t + 1 },
        matched: m,
        profit: cfg.profit_fn().apply(cfg.p_eff() * m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_schedule_values() {
        assert!((delta_schedule(100.0, 2.0, 2.0) - 0.184_206_807).abs() < 1e-8);
        assert!((delta_schedule(400.0, 2.0, 2.0) - 0.059_914_645).abs() < 1e-8);
        assert!(delta_schedule(1e12, 2.0, 2.0) < 1e-9);
    }

    #[test]
    fn match_branches() {
        assert_eq!(match_amount(0.5, 1.0, 0.1, 100.0), 0.0);
        assert!((match_amount(10.0, 1.0, 0.1, 100.0) - 0.9).abs() < 1e-15);
        assert!((match_amount(50.0, 1.0, 0.1, 100.0) - 0.9).abs() < 1e-15);
        assert!((match_amount(60.0, 1.0, 0.1, 100.0) - 1.1).abs() < 1e-15);
        // pathological U: the clamp binds
        assert_eq!(match_amount(1.05, 1.0, 0.1, 2.0), 1.05);
    }

    fn cfg() -> QueueConfig {
        QueueConfig::with_target_rate(1.0, 0.1, 100.0)
            .unwrap()
            .delta(0.1)
            .build()
            .unwrap()
    }

    #[test]
    fn step_examples() {
        let c = cfg();
        let out = step(QueueState { s: 5.0, q_c: 3.0, t: 0 }, 1, 0, &c);
        assert!((out.matched - 0.9).abs() < 1e-15);
        assert!((out.next.s - 5.1).abs() < 1e-12);
        assert!((out.next.q_c - 2.1).abs() < 1e-12);

        let full = step(QueueState { s: c.s_bar(), q_c: 0.0, t: 0 }, 2, 0, &c);
        assert_eq!(full.next.s, c.s_bar());
        assert_eq!(full.matched, 0.0);

        let empty = step(QueueState::default(), 0, 0, &c);
        assert_eq!((empty.next.s, empty.next.q_c, empty.matched), (0.0, 0.0, 0.0));
    }

    #[test]
    fn equality_regime_bumps_price() {
        let d = DemandCurve::linear(2.0, 1.0).unwrap();
        let c = QueueConfig::builder(0.8, d, 100.0).delta(0.1).build().unwrap();
        assert_eq!(c.critical().regime, PriceRegime::Equality);
        assert!((c.p_eff() - 1.2 * 1.001).abs() < 1e-12);
        assert!(c.customer_rate() < c.mu_star());
    }

    #[test]
    fn invariants_enforced() {
        let b = || QueueConfig::with_target_rate(1.0, 0.1, 100.0).unwrap();
        assert!(matches!(b().delta(1.0).build(), Err(Error::ConfigInvalid(_))));
        assert!(matches!(b().s_bar(100.0).build(), Err(Error::ConfigInvalid(_))));
        assert!(matches!(b().decay_exponent(1.5).build(), Err(Error::ConfigInvalid(_))));
        let tiny = QueueConfig::with_target_rate(1.0, 0.1, 2.0).unwrap().delta(0.1).build();
        assert!(matches!(tiny, Err(Error::ConfigInvalid(_))));
        assert!(QueueConfig::with_target_rate(1.0, 0.0, 100.0).is_err());
    }

    #[test]
    fn default_delta_and_cap() {
        let c = QueueConfig::with_target_rate(1.0, 0.1, 100.0).unwrap().build().unwrap();
        assert!((c.delta() - delta_schedule(100.0, 2.0, 2.0)).abs() < 1e-15);
        assert_eq!(c.s_bar(), 400.0);
        assert_eq!(c.p_star(), 1.0);
    }

    #[test]
    fn profit_functions() {
        assert_eq!(ProfitFn::Identity.apply(2.5), 2.5);
        assert!((ProfitFn::Log1p.apply(1.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
