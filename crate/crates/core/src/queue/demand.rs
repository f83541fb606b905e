use serde::Serialize;

use crate::error::{Error, Result};
use crate::golden::maximize;

/// Shape of the customer demand curve `μ(p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DemandForm {
    /// `μ(p) = (c - slope·p)^+`.
    Linear { intercept: f64, slope: f64 },
    /// `μ(p) = ((β - αp)^+)^θ` with `θ ∈ (0, 1]`.
    Power { beta: f64, alpha: f64, theta: f64 },
    /// Piecewise-linear interpolation through `(price, rate)` samples with
    /// increasing prices.
    Table { prices: Vec<f64>, rates: Vec<f64> },
}

/// Customer arrival rate as a function of the posted price, on a price
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandCurve {
    form: DemandForm,
    p_lo: f64,
    p_hi: f64,
}

const SHAPE_GRID: usize = 400;

impl DemandCurve {
    /// Linear demand on `[0, c/slope]`.
    pub fn linear(intercept: f64, slope: f64) -> Result<Self> {
        if !(intercept > 0.0 && slope > 0.0 && intercept.is_finite() && slope.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "linear demand needs positive intercept and slope, got ({intercept}, {slope})"
            )));
        }
        Self::new(DemandForm::Linear { intercept, slope }, 0.0, intercept / slope)
    }

    /// Power demand on `[0, β/α]`.
    pub fn power(beta: f64, alpha: f64, theta: f64) -> Result<Self> {
        if !(beta > 0.0 && alpha > 0.0 && beta.is_finite() && alpha.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "power demand needs positive beta and alpha, got ({beta}, {alpha})"
            )));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::ConfigInvalid(format!("power demand needs theta in (0, 1], got {theta}")));
        }
        Self::new(DemandForm::Power { beta, alpha, theta }, 0.0, beta / alpha)
    }

    /// Interpolated table; the domain is the sampled price range.
    pub fn table(prices: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if prices.len() < 2 || prices.len() != rates.len() {
            return Err(Error::ConfigInvalid(
                "demand table needs at least two (price, rate) samples of equal length".into(),
            ));
        }
        if prices.iter().chain(&rates).any(|v| !v.is_finite()) || rates.iter().any(|&r| r < 0.0) {
            return Err(Error::ConfigInvalid("demand table entries must be finite and rates non-negative".into()));
        }
        if prices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::ConfigInvalid("demand table prices must be strictly increasing".into()));
        }
        let (lo, hi) = (prices[0], prices[prices.len() - 1]);
        Self::new(DemandForm::Table { prices, rates }, lo, hi)
    }

    /// Restricts the price domain to `[p_lo, p_hi]`.
    pub fn with_domain(self, p_lo: f64, p_hi: f64) -> Result<Self> {
        if !(p_lo >= self.p_lo && p_hi <= self.p_hi && p_lo < p_hi) {
            return Err(Error::ConfigInvalid(format!(
                "domain [{p_lo}, {p_hi}] must be a non-empty part of [{}, {}]",
                self.p_lo, self.p_hi
            )));
        }
        Self::new(self.form, p_lo, p_hi)
    }

    fn new(form: DemandForm, p_lo: f64, p_hi: f64) -> Result<Self> {
        if !(p_lo >= 0.0 && p_lo < p_hi && p_hi.is_finite()) {
            return Err(Error::ConfigInvalid(format!("invalid price domain [{p_lo}, {p_hi}]")));
        }
        let curve = Self { form, p_lo, p_hi };
        curve.check_shape()?;
        Ok(curve)
    }

    /// Non-increasing, concave, and `p·μ(p)` unimodal on a uniform grid.
    fn check_shape(&self) -> Result<()> {
        let h = (self.p_hi - self.p_lo) / SHAPE_GRID as f64;
        let ps: Vec<f64> = (0..=SHAPE_GRID).map(|k| self.p_lo + k as f64 * h).collect();
        let mu: Vec<f64> = ps.iter().map(|&p| self.mu(p)).collect();
        let scale = mu[0].abs().max(1.0);
        let tol = 1e-9 * scale;
        if mu.windows(2).any(|w| w[1] > w[0] + tol) {
            return Err(Error::ConfigInvalid("demand must be non-increasing in price".into()));
        }
        if mu.windows(3).any(|w| w[0] - 2.0 * w[1] + w[2] > tol) {
            return Err(Error::ConfigInvalid("demand must be concave in price".into()));
        }
        let rev: Vec<f64> = ps.iter().zip(&mu).map(|(p, m)| p * m).collect();
        let rtol = 1e-9 * rev.iter().fold(1.0f64, |a, &r| a.max(r.abs()));
        let mut falling = false;
        for w in rev.windows(2) {
            if w[1] < w[0] - rtol {
                falling = true;
            } else if falling && w[1] > w[0] + rtol {
                return Err(Error::ConfigInvalid("revenue p·μ(p) must be unimodal".into()));
            }
        }
        Ok(())
    }

    pub fn form(&self) -> &DemandForm {
        &self.form
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.p_lo, self.p_hi)
    }

    /// `μ(p)`, with `p` clamped to the domain.
    pub fn mu(&self, p: f64) -> f64 {
        let p = p.clamp(self.p_lo, self.p_hi);
        match &self.form {
            DemandForm::Linear { intercept, slope } => (intercept - slope * p).max(0.0),
            DemandForm::Power { beta, alpha, theta } => {
                let base = (beta - alpha * p).max(0.0);
                if *theta == 1.0 {
                    base
                } else {
                    base.powf(*theta)
                }
            }
            DemandForm::Table { prices, rates } => {
                let k = prices.partition_point(|&x| x <= p).clamp(1, prices.len() - 1);
                let (x0, x1) = (prices[k - 1], prices[k]);
                let t = (p - x0) / (x1 - x0);
                rates[k - 1] + t * (rates[k] - rates[k - 1])
            }
        }
    }

    /// Smallest price in the domain with `μ(p) ≤ rate`, if any.
    pub fn min_price_at_most(&self, rate: f64) -> Option<f64> {
        if self.mu(self.p_hi) > rate {
            return None;
        }
        if self.mu(self.p_lo) <= rate {
            return Some(self.p_lo);
        }
        let exact = match &self.form {
            DemandForm::Linear { intercept, slope } => Some((intercept - rate) / slope),
            DemandForm::Power { beta, alpha, theta } => Some((beta - rate.powf(1.0 / theta)) / alpha),
            DemandForm::Table { .. } => None,
        };
        if let Some(p) = exact.map(|p| p.clamp(self.p_lo, self.p_hi)) {
            if self.mu(p) <= rate {
                return Some(p);
            }
        }
        let (mut a, mut b) = (self.p_lo, self.p_hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.mu(mid) <= rate {
                b = mid;
            } else {
                a = mid;
            }
        }
        Some(b)
    }
}

/// Whether the rate constraint binds at the critical price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PriceRegime {
    /// `μ(p*) < λ`.
    Slack,
    /// `μ(p*) = λ`; the platform charges `p* + ε` instead.
    Equality,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPrice {
    pub p_star: f64,
    pub mu_star: f64,
    pub regime: PriceRegime,
}

const EQUALITY_TOL: f64 = 1e-9;

/// Maximizes `p·μ(p)` subject to `μ(p) ≤ λ`.
pub fn solve_pstar(demand: &DemandCurve, lambda: f64) -> Result<CriticalPrice> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::ConfigInvalid(format!("server rate must be positive, got {lambda}")));
    }
    let lo = demand.min_price_at_most(lambda).ok_or(Error::InfeasibleDemand(lambda))?;
    let (_, hi) = demand.domain();
    let revenue = |p: f64| p * demand.mu(p);
    // endpoints first so that ties snap to the constraint boundary
    let mut best = (lo, revenue(lo));
    let mut consider = |p: f64| {
        let v = revenue(p);
        if v > best.1 {
            best = (p, v);
        }
    };
    if hi > lo {
        // revenue is unimodal, so the clamped free maximizer is optimal
        let free = match demand.form() {
            DemandForm::Linear { intercept, slope } => intercept / (2.0 * slope),
            DemandForm::Power { beta, alpha, theta } => beta / (alpha * (1.0 + theta)),
            DemandForm::Table { .. } => maximize(revenue, lo, hi, 1e-13 * hi.max(1.0)).x,
        };
        consider(free.clamp(lo, hi));
        consider(hi);
    }
    let p_star = best.0;
    let mu_star = demand.mu(p_star);
    let regime = if (mu_star - lambda).abs() <= EQUALITY_TOL {
        PriceRegime::Equality
    } else {
        PriceRegime::Slack
    };
    Ok(CriticalPrice { p_star, mu_star, regime })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_regime_linear() {
        let d = DemandCurve::linear(2.0, 1.0).unwrap();
        let c = solve_pstar(&d, 1.1).unwrap();
        assert_eq!(c.p_star, 1.0);
        assert_eq!(c.mu_star, 1.0);
        assert_eq!(c.regime, PriceRegime::Slack);
    }

    #[test]
    fn equality_regime_linear() {
        let d = DemandCurve::linear(2.0, 1.0).unwrap();
        let c = solve_pstar(&d, 0.8).unwrap();
        assert!((c.p_star - 1.2).abs() < 1e-12);
        assert!((c.mu_star - 0.8).abs() < 1e-12);
        assert_eq!(c.regime, PriceRegime::Equality);
    }

    #[test]
    fn inactive_constraint_matches_unconstrained() {
        let d = DemandCurve::power(3.0, 1.0, 0.5).unwrap();
        let free = maximize(|p| p * d.mu(p), 0.0, 3.0, 1e-12);
        let c = solve_pstar(&d, 100.0).unwrap();
        assert!((c.p_star - free.x).abs() < 1e-6);
        // unconstrained optimum of p·sqrt(3 - p) is at p = 2
        assert!((c.p_star - 2.0).abs() < 1e-6);
    }

    #[test]
    fn table_optimum_found_numerically() {
        // μ = 2 - p sampled at the kinks only
        let d = DemandCurve::table(vec![0.0, 0.5, 2.0], vec![2.0, 1.5, 0.0]).unwrap();
        let c = solve_pstar(&d, 10.0).unwrap();
        assert!((c.p_star - 1.0).abs() < 1e-6);
        assert!((c.mu_star - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_when_domain_is_truncated() {
        let d = DemandCurve::linear(2.0, 1.0).unwrap().with_domain(0.0, 1.0).unwrap();
        assert_eq!(solve_pstar(&d, 0.5), Err(Error::InfeasibleDemand(0.5)));
    }

    #[test]
    fn shape_checks() {
        assert!(DemandCurve::table(vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]).is_ok());
        assert!(matches!(
            DemandCurve::table(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 0.0]),
            Err(Error::ConfigInvalid(_))
        ));
        // convex kink
        assert!(matches!(
            DemandCurve::table(vec![0.0, 1.0, 2.0], vec![2.0, 0.5, 0.0]),
            Err(Error::ConfigInvalid(_))
        ));
        assert!(DemandCurve::power(1.0, 1.0, 1.5).is_err());
        assert!(DemandCurve::linear(-1.0, 1.0).is_err());
    }

    #[test]
    fn table_interpolates_and_inverts() {
        let d = DemandCurve::table(vec![0.0, 1.0, 2.0], vec![2.0, 1.5, 0.0]).unwrap();
        assert!((d.mu(0.5) - 1.75).abs() < 1e-15);
        assert!((d.mu(1.5) - 0.75).abs() < 1e-15);
        let p = d.min_price_at_most(0.75).unwrap();
        assert!((p - 1.5).abs() < 1e-12);
    }
}
