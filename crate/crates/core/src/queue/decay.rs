use crate::error::{Error, Result};

/// Per-slot log-MGF of Poisson(`mu`) arrivals.
pub fn poisson_log_mgf(mu: f64) -> impl Fn(f64) -> f64 {
    move |s| mu * s.exp_m1()
}

const MAX_DOUBLINGS: u32 = 200;

/// Positive root of `ψ(τ) = M(-τ) + τ(μ* - δ)`, the exponential decay rate
/// of the outage probability in the queue length.
///
/// `log_mgf` is the per-slot customer-arrival log-MGF. Returns 0 for
/// `δ = 0`.
pub fn tau_star<F: Fn(f64) -> f64>(mu_star: f64, delta: f64, log_mgf: F) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    if !(delta > 0.0 && mu_star > 0.0) {
        return Err(Error::PreconditionViolation(format!(
            "need delta > 0 and mu* > 0, got delta = {delta}, mu* = {mu_star}"
        )));
    }
    let psi = |tau: f64| log_mgf(-tau) + tau * (mu_star - delta);
    let mut hi = 1.0;
    let mut doublings = 0;
    while psi(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(Error::NoRoot(hi));
        }
    }
    // ψ(0) = 0 and ψ'(0) = -δ < 0, so ψ is negative just right of zero
    let mut lo = 0.0;
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_poisson_example() {
        let tau = tau_star(1.0, 0.1, poisson_log_mgf(1.0)).unwrap();
        // the defining equation, checked independently
        assert!(((-tau).exp() - 1.0 + 0.9 * tau).abs() < 1e-14);
        assert!((tau - 0.214_556).abs() < 1e-6, "{tau}");
    }

    #[test]
    fn small_delta_slope() {
        let d = 1e-3;
        let a = tau_star(1.0, d, poisson_log_mgf(1.0)).unwrap();
        let b = tau_star(1.0, d / 2.0, poisson_log_mgf(1.0)).unwrap();
        let slope = (a - b) / (d / 2.0);
        assert!((slope / 2.0 - 1.0).abs() < 0.05, "{slope}");
        assert!((a / (2.0 * d) - 1.0).abs() < 0.1);
    }

    #[test]
    fn degenerate_and_missing_roots() {
        assert_eq!(tau_star(1.0, 0.0, poisson_log_mgf(1.0)).unwrap(), 0.0);
        assert!(matches!(tau_star(1.0, 1.5, poisson_log_mgf(1.0)), Err(Error::NoRoot(_))));
    }
}
