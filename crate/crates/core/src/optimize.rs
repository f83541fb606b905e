//! Optimizers and universal bounds for the loss model.
//!
//! * [`optimal_static_price`]: best constant price, closed form for linear
//!   demand and golden-section search otherwise.
//! * [`universal_bounds`]: policy-free ceilings on the relaxed objective.
//! * [`optimize_bangbang`]: one-dimensional search over the threshold family.
//! * [`brute_force_min_pi0`], [`bang_bang_min_pi0`], [`claim1_perturb`]: the
//!   "minimize `π_0` under a mean cap" problem on small chains.
//! * [`competitive_cases`]: heavy/light traffic static price choices.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::golden::{grid_then_golden, maximize};
use crate::markov::{f_and_m, stationary_truncated, MomentCap, RhoProfile, DEFAULT_TOL};
use crate::pricing::{evaluate, Policy, PriceModel};

const GOLDEN_TOL: f64 = 1e-12;

// ── Static pricing ──────────────────────────────────────────────────────

/// Payoff of the static price `p`: `p - w̃/(g(p) - λ)`.
pub fn static_payoff(model: &PriceModel, p: f64) -> f64 {
    let slack = model.g(p) - model.lambda();
    if slack <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p - model.w_tilde() / slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticOptimum {
    pub price: f64,
    pub value: f64,
    /// Whether the linear-demand closed form produced the answer.
    pub closed_form: bool,
}

/// Best constant price over the stable part of the price box.
pub fn optimal_static_price(model: &PriceModel) -> Result<StaticOptimum> {
    let lambda = model.lambda();
    // prices above g^{-1}(λ) cannot keep the server queue stable
    let stable_hi = model.p_max().min(model.g_inv(lambda));
    if stable_hi <= model.p_min() || model.mu_max() <= lambda {
        return Err(Error::NoStablePrice);
    }
    let (alpha, beta, w_tilde) = (model.alpha(), model.beta(), model.w_tilde());
    let root = (alpha * w_tilde).sqrt();
    if model.is_linear() && model.mu_max() >= lambda + root {
        let p = (beta - root - lambda) / alpha;
        if p <= model.p_max() {
            return Ok(StaticOptimum {
                price: p,
                value: (beta - 2.0 * root - lambda) / alpha,
                closed_form: true,
            });
        }
        // payoff is concave, so the clamped maximizer sits on the box edge
        return Ok(StaticOptimum {
            price: model.p_max(),
            value: static_payoff(model, model.p_max()),
            closed_form: true,
        });
    }
    let best = maximize(|p| static_payoff(model, p), model.p_min(), stable_hi, GOLDEN_TOL);
    let at_min = static_payoff(model, model.p_min());
    let (price, value) = if at_min >= best.value {
        (model.p_min(), at_min)
    } else {
        (best.x, best.value)
    };
    if !value.is_finite() {
        return Err(Error::NoStablePrice);
    }
    Ok(StaticOptimum {
        price,
        value,
        closed_form: false,
    })
}

// ── Universal bounds ─────────────────────────────────────────────────────

/// `B = (w̃αθ)^{1/(θ+1)} (1 + 1/θ)`.
pub fn light_traffic_scale(model: &PriceModel) -> f64 {
    let theta = model.theta();
    (model.w_tilde() * model.alpha() * theta).powf(1.0 / (theta + 1.0)) * (1.0 + 1.0 / theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `g^{-1}(λ)`.
    pub g_inv_bound: f64,
    /// `max_{p ∈ [p_min, p_max]} p - w̃/g(p)`.
    pub light_traffic_bound_boxed: f64,
    /// Maximizer of the boxed light-traffic expression.
    pub light_traffic_argmax: f64,
    /// The same maximum taken over all real prices, `(β - B)/α`.
    pub light_traffic_bound_relaxed: f64,
    /// `β/α - max(λ^{1/θ}, B)/α`.
    pub combined_relaxed: f64,
    /// `min(g_inv_bound, light_traffic_bound_boxed)`.
    pub combined: f64,
    pub b: f64,
    /// `β > B`: some policy could earn a positive relaxed payoff.
    pub positive_payoff_possible: bool,
}

pub fn universal_bounds(model: &PriceModel) -> BoundsReport {
    let g_inv_bound = model.g_inv(model.lambda());
    let w_tilde = model.w_tilde();
    let light = |p: f64| p - w_tilde / model.g(p);
    let interior = maximize(light, model.p_min(), model.p_max(), GOLDEN_TOL);
    let candidates = [
        (model.p_min(), light(model.p_min())),
        (model.p_max(), light(model.p_max())),
        (interior.x, interior.value),
    ];
    let (argmax, boxed) = candidates
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    let b = light_traffic_scale(model);
    let ceiling = model.price_ceiling();
    let lambda_term = model.lambda().powf(1.0 / model.theta());
    BoundsReport {
        g_inv_bound,
        light_traffic_bound_boxed: boxed,
        light_traffic_argmax: argmax,
        light_traffic_bound_relaxed: ceiling - b / model.alpha(),
        combined_relaxed: ceiling - lambda_term.max(b) / model.alpha(),
        combined: g_inv_bound.min(boxed),
        b,
        positive_payoff_possible: model.beta() > b,
    }
}

// ── Bang-bang search ─────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BangBangOptimum {
    /// Maximizer of the relaxed objective.
    pub x_rel: f64,
    pub value_rel: f64,
    /// Original objective at `x_rel`.
    pub c_at_x_rel: f64,
    /// Maximizer of the original objective over the same family.
    pub x_c: f64,
    pub value_c: f64,
}

pub const DEFAULT_X_MAX: f64 = 50.0;
pub const DEFAULT_X_GRID: f64 = 0.05;
const X_TOL: f64 = 1e-6;

/// Maximizes both objectives over `BangBang(x)`, `x ∈ [0, x_max]`, by a grid
/// scan followed by golden-section refinement around the best grid point.
pub fn optimize_bangbang(model: &PriceModel, x_max: f64, grid: f64) -> Result<BangBangOptimum> {
    if !model.is_linear() {
        return Err(Error::RequiresLinearModel(model.theta()));
    }
    if !(grid > 0.0 && grid.is_finite()) {
        return Err(invalid("grid", format!("must be positive, got {grid}")));
    }
    if !(x_max >= 0.0 && x_max.is_finite()) {
        return Err(invalid("x_max", format!("must be non-negative, got {x_max}")));
    }
    let eval = |x: f64| evaluate(model, &Policy::BangBang(x.max(0.0)));
    let rel = grid_then_golden(
        |x| eval(x).map_or(f64::NEG_INFINITY, |o| o.c_rel),
        0.0,
        x_max,
        grid,
        X_TOL,
    );
    let orig = grid_then_golden(
        |x| eval(x).map_or(f64::NEG_INFINITY, |o| o.c),
        0.0,
        x_max,
        grid,
        X_TOL,
    );
    Ok(BangBangOptimum {
        x_rel: rel.x,
        value_rel: rel.value,
        c_at_x_rel: eval(rel.x)?.c,
        x_c: orig.x,
        value_c: orig.value,
    })
}

// ── Minimizing π_0 under a mean cap ──────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinPi0 {
    /// `ρ_1..ρ_{n-1}` of the winning finite chain.
    pub rho: Vec<f64>,
    pub pi0: f64,
    pub mean: f64,
}

const TIE_TOL: f64 = 1e-12;

/// Every feasible assignment attaining the minimal `π_0` (within a relative
/// `1e-12`), sorted lexicographically descending.
pub fn brute_force_minimizers(n_states: usize, rho_levels: &[f64], cap: MomentCap) -> Result<Vec<MinPi0>> {
    if n_states < 2 {
        return Err(invalid("n_states", "need at least two states"));
    }
    if rho_levels.is_empty() || rho_levels.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(invalid("rho_levels", "levels must be positive and finite"));
    }
    let slots = n_states - 1;
    let n_levels = rho_levels.len();
    let total = n_levels
        .checked_pow(slots as u32)
        .filter(|&t| t <= 10_000_000)
        .ok_or_else(|| invalid("n_states", "enumeration too large"))?;

    let mut feasible: Vec<MinPi0> = Vec::new();
    let mut best = f64::INFINITY;
    let mut rho = vec![0.0; slots];
    for code in 0..total {
        let mut c = code;
        for slot in rho.iter_mut() {
            *slot = rho_levels[c % n_levels];
            c /= n_levels;
        }
        let dist = stationary_truncated(&RhoProfile::finite(rho.clone())?, DEFAULT_TOL)?;
        let mean = dist.mean();
        if mean > cap.value() * (1.0 + TIE_TOL) {
            continue;
        }
        let pi0 = dist.pi0();
        if pi0 <= best * (1.0 + TIE_TOL) {
            best = best.min(pi0);
            feasible.push(MinPi0 {
                rho: rho.clone(),
                pi0,
                mean,
            });
        }
    }
    if feasible.is_empty() {
        return Err(Error::Infeasible(cap.value()));
    }
    let mut winners: Vec<MinPi0> = feasible
        .into_iter()
        .filter(|c| c.pi0 <= best * (1.0 + TIE_TOL))
        .collect();
    winners.sort_by(|a, b| {
        b.rho
            .iter()
            .zip(&a.rho)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(winners)
}

/// Exhaustive search over ratio assignments drawn from `rho_levels` on the
/// finite chain with `n_states` states; ties go to the lexicographically
/// largest assignment.
pub fn brute_force_min_pi0(n_states: usize, rho_levels: &[f64], cap: MomentCap) -> Result<MinPi0> {
    Ok(brute_force_minimizers(n_states, rho_levels, cap)?.swap_remove(0))
}

/// Non-increasing with at most one value strictly inside `(low, high)`.
pub fn is_bang_bang(rho: &[f64], low: f64, high: f64) -> bool {
    let tol = 1e-12 * high.abs().max(1.0);
    let monotone = rho.windows(2).all(|w| w[0] >= w[1] - tol);
    let intermediate = rho
        .iter()
        .filter(|&&r| r > low + tol && r < high - tol)
        .count();
    monotone && intermediate <= 1
}

/// Optimum of the continuous problem (`ρ_i ∈ [low, high]`) restricted to
/// bang-bang profiles on a finite chain: `high` below the threshold state,
/// the largest feasible ratio at it, and `low` above it.
pub fn bang_bang_min_pi0(n_states: usize, low: f64, high: f64, cap: MomentCap) -> Result<MinPi0> {
    if n_states < 2 {
        return Err(invalid("n_states", "need at least two states"));
    }
    if !(0.0 < low && low <= high) {
        return Err(invalid("bounds", "need 0 < low <= high"));
    }
    let slots = n_states - 1;
    let eval = |rho: &[f64]| -> Result<(f64, f64)> {
        let d = stationary_truncated(&RhoProfile::new(rho.to_vec(), None, (low, high))?, DEFAULT_TOL)?;
        Ok((d.pi0(), d.mean()))
    };
    let mut best: Option<MinPi0> = None;
    for ell in 1..=slots {
        let shape = |r: f64| -> Vec<f64> {
            (1..=slots)
                .map(|i| match i.cmp(&ell) {
                    std::cmp::Ordering::Less => high,
                    std::cmp::Ordering::Equal => r,
                    std::cmp::Ordering::Greater => low,
                })
                .collect()
        };
        // the mean grows with r, so the largest feasible r is found by bisection
        let (_, mean_lo) = eval(&shape(low))?;
        if mean_lo > cap.value() {
            continue;
        }
        let r = if eval(&shape(high))?.1 <= cap.value() {
            high
        } else {
            let (mut a, mut b) = (low, high);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if eval(&shape(mid))?.1 <= cap.value() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            a
        };
        let rho = shape(r);
        let (pi0, mean) = eval(&rho)?;
        if best.as_ref().is_none_or(|b| pi0 < b.pi0) {
            best = Some(MinPi0 { rho, pi0, mean });
        }
    }
    best.ok_or(Error::Infeasible(cap.value()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim1Step {
    pub profile: RhoProfile,
    /// `f(ρ̃) - f(ρ)`.
    pub delta_f: f64,
    /// `m(ρ̃)`, zero up to rounding.
    pub m_new: f64,
}

/// First index `i` with `ρ_i < high` and `ρ_{i+1} > low`, i.e. a spot where
/// the profile is not yet bang-bang ordered.
pub fn admissible_index(profile: &RhoProfile) -> Option<usize> {
    let (low, high) = profile.bounds();
    let n = profile.rho().len();
    (1..n).find(|&i| {
        let (a, b) = (profile.rho()[i - 1], profile.rho()[i]);
        a < high && b > low
    })
}

/// Raises `ρ_i` by `eps` and lowers `ρ_{i+1}` so that `m` stays zero.
///
/// The product update is
/// `ρ̃_i ρ̃_{i+1} - ρ_i ρ_{i+1} = -eps (i - 𝒞) / D` with
/// `D = Σ_{j≥i+1} (j - 𝒞) h_j / h_{i+1}`; the resulting `f` strictly grows.
pub fn claim1_perturb(profile: &RhoProfile, i: usize, eps: f64, cap: MomentCap) -> Result<Claim1Step> {
    let (low, high) = profile.bounds();
    let n = profile.rho().len();
    if i == 0 || i + 1 > n {
        return Err(Error::PreconditionViolation(format!(
            "states {i} and {} must both be explicit",
            i + 1
        )));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let (f_old, m_old) = f_and_m(profile, cap)?;
    if m_old.abs() > 1e-9 * f_old.max(1.0) {
        return Err(Error::PreconditionViolation(format!("m = {m_old} is not zero")));
    }
    let (rho_i, rho_next) = (profile.rho()[i - 1], profile.rho()[i]);
    if !(rho_i < high && rho_next > low) {
        return Err(Error::PreconditionViolation(format!(
            "need rho_{i} < {high} and rho_{} > {low}, got ({rho_i}, {rho_next})",
            i + 1
        )));
    }
    let dist = stationary_truncated(profile, DEFAULT_TOL)?;
    let c = cap.value();
    let d = (dist.moment_from(i + 1) - c * dist.mass_from(i + 1)) / dist.prob(i + 1);
    if !(d > 0.0) {
        return Err(Error::PreconditionViolation(format!("denominator {d} is not positive")));
    }
    let product = rho_i * rho_next - eps * (i as f64 - c) / d;
    let new_i = rho_i + eps;
    let new_next = product / (rho_i + eps);
    let out_of_box = |v: f64| v < low || v > high;
    if out_of_box(new_i) || out_of_box(new_next) {
        let (index, value) = if out_of_box(new_i) { (i, new_i) } else { (i + 1, new_next) };
        return Err(Error::BoundViolation { index, value, low, high });
    }
    let mut rho = profile.rho().to_vec();
    rho[i - 1] = new_i;
    rho[i] = new_next;
    let moved = RhoProfile::new(rho, profile.tail(), (low, high))?;
    let (f_new, m_new) = f_and_m(&moved, cap)?;
    Ok(Claim1Step {
        profile: moved,
        delta_f: f_new - f_old,
        m_new,
    })
}

// ── Competitive static prices ────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    HeavyTraffic,
    LightTraffic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompetitiveReport {
    pub regime: Regime,
    pub gamma: f64,
    pub b: f64,
    /// Customer rate the static price targets.
    pub target_rate: f64,
    pub price: f64,
    /// Closed-form lower bound on the static payoff.
    pub payoff_lower: f64,
    /// Relaxed objective actually achieved by the static price.
    pub payoff_exact: f64,
    /// Payoff reduction from `β/α` relative to the smallest reduction any
    /// policy must suffer.
    pub reduction_ratio_estimate: f64,
}

/// Static price for the heavy (`λ^{1/θ} ≥ B`) or light traffic case with
/// slack factor `gamma`.
pub fn competitive_cases(model: &PriceModel, gamma: f64) -> Result<CompetitiveReport> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(invalid("gamma", format!("must exceed 1, got {gamma}")));
    }
    let theta = model.theta();
    let (alpha, w_tilde) = (model.alpha(), model.w_tilde());
    let b = light_traffic_scale(model);
    let lambda = model.lambda();
    let lambda_term = lambda.powf(1.0 / theta);
    let ceiling = model.price_ceiling();
    let (regime, target_rate, payoff_lower) = if lambda_term >= b {
        (
            Regime::HeavyTraffic,
            gamma * lambda,
            ceiling - (gamma * lambda).powf(1.0 / theta) / alpha - w_tilde / ((gamma - 1.0) * lambda),
        )
    } else {
        let b_theta = b.powf(theta);
        (
            Regime::LightTraffic,
            gamma * b_theta,
            ceiling - gamma.powf(1.0 / theta) * b / alpha - w_tilde / ((gamma - 1.0) * b_theta),
        )
    };
    let (mu_min, mu_max) = (model.mu_min(), model.mu_max());
    if target_rate > mu_max || target_rate < mu_min {
        return Err(Error::InfeasibleRate {
            required: target_rate,
            mu_min,
            mu_max,
        });
    }
    let price = model.g_inv(target_rate).clamp(model.p_min(), model.p_max());
    let payoff_exact = evaluate(model, &Policy::Static(price))?.c_rel;
    Ok(CompetitiveReport {
        regime,
        gamma,
        b,
        target_rate,
        price,
        payoff_lower,
        payoff_exact,
        reduction_ratio_estimate: (ceiling - payoff_lower) / (lambda_term.max(b) / alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base_model(w: f64) -> PriceModel {
        PriceModel::linear(1.0, 3.5, 1.0, 2.0, 2.0, w).unwrap()
    }

    #[test]
    fn static_closed_form() {
        let s = optimal_static_price(&base_model(0.05)).unwrap();
        assert!(s.closed_form);
        assert_relative_eq!(s.price, 1.5 - 0.1f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(s.value, 1.5 - 2.0 * 0.1f64.sqrt(), epsilon = 1e-14);
        let s = optimal_static_price(&base_model(0.1)).unwrap();
        assert_relative_eq!(s.price, 1.5 - 0.2f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(s.value, 1.5 - 2.0 * 0.2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn static_value_matches_chain_evaluation() {
        for w in [0.05, 0.1, 0.3] {
            let m = base_model(w);
            let s = optimal_static_price(&m).unwrap();
            let c = evaluate(&m, &Policy::Static(s.price)).unwrap().c_rel;
            assert_relative_eq!(s.value, c, epsilon = 1e-10);
        }
    }

    #[test]
    fn static_numeric_agrees_with_closed_form() {
        // same linear curve written as θ = 1 but forced through the search
        let m = base_model(0.05);
        let best = maximize(|p| static_payoff(&m, p), 1.0, 1.5, 1e-12);
        let s = optimal_static_price(&m).unwrap();
        assert_relative_eq!(best.x, s.price, epsilon = 1e-6);
        assert_relative_eq!(best.value, s.value, epsilon = 1e-10);
    }

    #[test]
    fn vanishing_holding_cost_pushes_to_stability_edge() {
        let m = PriceModel::new(1.0, 3.5, 0.999_999, 1.0, 2.0, 2.0, 1e-10).unwrap();
        let s = optimal_static_price(&m).unwrap();
        assert!(!s.closed_form);
        assert!((s.price - m.g_inv(2.0)).abs() < 1e-3);
        assert!((s.value - 1.5).abs() < 1e-3);
    }

    #[test]
    fn clamped_to_box_when_unconstrained_optimum_is_outside() {
        // μ_max = 2.5 < λ + √(αw̃) = 2 + √(2·... ) forces p_min
        let m = base_model(0.2);
        assert!(m.mu_max() < m.lambda() + (m.alpha() * m.w_tilde()).sqrt());
        let s = optimal_static_price(&m).unwrap();
        assert_relative_eq!(s.price, 1.0, epsilon = 1e-9);
        assert_relative_eq!(s.value, 1.0 - 0.4 / 0.5, epsilon = 1e-9);

        // tiny holding weight in light traffic: p* beyond p_max
        let m = PriceModel::linear(1.0, 3.5, 1.0, 2.0, 0.5, 0.01).unwrap();
        let s = optimal_static_price(&m).unwrap();
        assert_eq!(s.price, 2.0);
        assert_relative_eq!(s.value, static_payoff(&m, 2.0), epsilon = 1e-14);
    }

    #[test]
    fn bounds_for_reference_model() {
        let b = universal_bounds(&base_model(0.05));
        assert_relative_eq!(b.g_inv_bound, 1.5, epsilon = 1e-14);
        assert_relative_eq!(b.light_traffic_bound_boxed, 2.0 - 0.1 / 1.5, epsilon = 1e-12);
        assert_relative_eq!(b.light_traffic_argmax, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b.light_traffic_bound_relaxed, 3.5 - 2.0 * 0.1f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(b.combined, 1.5, epsilon = 1e-14);
        // β/α - max(λ/α, 2√(w̃α)/α) = 3.5 - 2
        assert_relative_eq!(b.combined_relaxed, 1.5, epsilon = 1e-14);
        assert!(b.combined <= 3.5);
    }

    #[test]
    fn heavy_holding_cost_flags_negative_payoff() {
        // w̃ = 4 with λ = 2
        let m = base_model(2.0);
        let b = universal_bounds(&m);
        assert_relative_eq!(b.light_traffic_bound_relaxed, -0.5, epsilon = 1e-12);
        assert!(!b.positive_payoff_possible);
    }

    #[test]
    fn boxed_light_traffic_bound_caps_c_but_not_c_rel() {
        // p_0 = p_max while every other state charges p_min
        let m = PriceModel::linear(1.0, 3.5, 1.0, 2.0, 0.5, 3.0).unwrap();
        let b = universal_bounds(&m);
        let o = evaluate(&m, &Policy::BangBang(0.0)).unwrap();
        assert_relative_eq!(b.light_traffic_bound_boxed, 1.0, epsilon = 1e-12);
        assert_relative_eq!(o.c_rel, 1.05, epsilon = 1e-12);
        assert_relative_eq!(o.c, 0.25, epsilon = 1e-12);
        assert!(o.c <= b.light_traffic_bound_boxed);
    }

    #[test]
    fn bang_bang_search_dominates_evaluated_points() {
        let m = base_model(0.05);
        let opt = optimize_bangbang(&m, DEFAULT_X_MAX, DEFAULT_X_GRID).unwrap();
        assert!(opt.value_rel >= 4.0 / 3.0 - 0.05 * 124.0 / 27.0);
        assert!(opt.value_rel >= optimal_static_price(&m).unwrap().value);
        let opt_heavier = optimize_bangbang(&base_model(0.1), DEFAULT_X_MAX, DEFAULT_X_GRID).unwrap();
        assert!(opt_heavier.x_rel <= opt.x_rel);
        let opt_huge = optimize_bangbang(&base_model(50.0), DEFAULT_X_MAX, DEFAULT_X_GRID).unwrap();
        assert!(opt_huge.x_rel < 0.05);
    }

    #[test]
    fn bang_bang_needs_linear_demand() {
        let m = PriceModel::new(1.0, 3.5, 0.5, 1.0, 2.0, 1.0, 0.05).unwrap();
        assert!(matches!(
            optimize_bangbang(&m, 10.0, 0.1),
            Err(Error::RequiresLinearModel(_))
        ));
    }

    #[test]
    fn enumeration_small_instance() {
        let cap = MomentCap::new(1.0).unwrap();
        let best = brute_force_min_pi0(3, &[0.5, 1.5], cap).unwrap();
        assert_eq!(best.rho, vec![1.5, 0.5]);
        assert_relative_eq!(best.pi0, 1.0 / 3.25, epsilon = 1e-14);

        let tight = MomentCap::new(0.4).unwrap();
        assert_eq!(brute_force_min_pi0(3, &[0.5, 1.5], tight).unwrap_err(), Error::Infeasible(0.4));

        let single = brute_force_min_pi0(3, &[0.5], MomentCap::new(0.6).unwrap()).unwrap();
        assert_eq!(single.rho, vec![0.5, 0.5]);
        assert_relative_eq!(single.pi0, 4.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn ties_prefer_lexicographically_largest() {
        // every assignment of a single level ties with itself; two equal
        // levels force a tie across all assignments
        let cap = MomentCap::new(10.0).unwrap();
        let all = brute_force_minimizers(3, &[0.5, 0.5], cap).unwrap();
        assert_eq!(all.len(), 4);
        let best = brute_force_min_pi0(3, &[0.7, 0.5, 0.7], cap).unwrap();
        assert_eq!(best.rho, vec![0.7, 0.7]);
    }

    #[test]
    fn bang_bang_shape_predicate() {
        assert!(is_bang_bang(&[1.5, 1.5, 1.0, 0.5], 0.5, 1.5));
        assert!(!is_bang_bang(&[1.5, 1.0, 1.0, 0.5], 0.5, 1.5));
        assert!(!is_bang_bang(&[0.5, 1.5], 0.5, 1.5));
        assert!(is_bang_bang(&[], 0.5, 1.5));
    }

    #[test]
    fn continuous_bang_bang_is_at_least_as_good_as_grid() {
        let levels = [0.5, 1.0, 1.5];
        for n in 2..=5 {
            for cap in [0.5, 0.75, 1.0, 1.5, 2.0] {
                let cap = MomentCap::new(cap).unwrap();
                let (Ok(grid), Ok(bb)) = (
                    brute_force_min_pi0(n, &levels, cap),
                    bang_bang_min_pi0(n, 0.5, 1.5, cap),
                ) else {
                    continue;
                };
                assert!(bb.pi0 <= grid.pi0 * (1.0 + 1e-9), "n={n} {bb:?} {grid:?}");
                assert!(is_bang_bang(&bb.rho, 0.5, 1.5));
            }
        }
    }

    #[test]
    fn claim1_on_constructed_profile() {
        let p = RhoProfile::finite(vec![0.5, 1.5]).unwrap();
        let cap = MomentCap::new(stationary_truncated(&p, DEFAULT_TOL).unwrap().mean()).unwrap();
        let step = claim1_perturb(&p, 1, 1e-3, cap).unwrap();
        assert!(step.delta_f > 0.0);
        assert!(step.m_new.abs() < 1e-8);

        let small = claim1_perturb(&p, 1, 1e-9, cap).unwrap();
        assert!(small.delta_f > 0.0 && small.delta_f < 1e-6);
    }

    #[test]
    fn claim1_rejects_ordered_profile_and_nonzero_m() {
        let p = RhoProfile::finite(vec![1.5, 0.5]).unwrap();
        let cap = MomentCap::new(stationary_truncated(&p, DEFAULT_TOL).unwrap().mean()).unwrap();
        assert_eq!(admissible_index(&p), None);
        assert!(matches!(
            claim1_perturb(&p, 1, 1e-3, cap),
            Err(Error::PreconditionViolation(_))
        ));
        let q = RhoProfile::finite(vec![0.5, 1.5]).unwrap();
        assert!(matches!(
            claim1_perturb(&q, 1, 1e-3, MomentCap::new(1.0).unwrap()),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn competitive_heavy_traffic() {
        let m = base_model(0.05);
        let r = competitive_cases(&m, 1.2).unwrap();
        assert_eq!(r.regime, Regime::HeavyTraffic);
        assert_relative_eq!(r.b, 2.0 * 0.1f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(r.payoff_lower, 0.85, epsilon = 1e-12);
        assert_relative_eq!(r.target_rate, 2.4, epsilon = 1e-14);
        assert!(r.payoff_lower <= optimal_static_price(&m).unwrap().value);
        assert!(r.payoff_lower <= universal_bounds(&m).combined);
        assert!(matches!(
            competitive_cases(&m, 1.3),
            Err(Error::InfeasibleRate { .. })
        ));
        // reduction = γ·(λ/α) + w̃/((γ-1)λ), measured against λ/α
        let holding = m.w_tilde() / (0.2 * 2.0);
        assert_relative_eq!(r.reduction_ratio_estimate, 1.2 + holding / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn competitive_light_traffic() {
        let m = PriceModel::new(1.0, 4.0, 0.5, 0.5, 3.5, 0.2, 1.0).unwrap();
        let r = competitive_cases(&m, 1.5).unwrap();
        assert_eq!(r.regime, Regime::LightTraffic);
        assert!(r.payoff_lower <= r.payoff_exact + 1e-12);
    }
}
