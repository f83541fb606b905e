use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use super::algorithm::{step, ProfitFn, QueueConfig, QueueState};
use super::arrivals::ArrivalProcess;
use super::demand::{solve_pstar, DemandCurve};
use crate::error::{Error, Result};
use crate::stats::{BatchAccumulator, BatchStats, CompensatedSum, RngHandle, DEFAULT_BATCHES};

/// Steady-state estimates from one or more pooled replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub u: f64,
    pub mu_star: f64,
    pub delta: f64,
    pub p_eff: f64,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub replications: u64,
    /// Mean of `V(p_eff·m)` per slot.
    pub profit_rate: BatchStats,
    /// Fraction of slots with `N < μ* - δ`.
    pub outage_prob: BatchStats,
    pub mean_n: BatchStats,
    /// Mean customer wait in slots, weighted by matched mass.
    pub mean_w: BatchStats,
    /// Fraction of slots with `N > U/2`.
    pub frac_high: BatchStats,
    pub frac_low: BatchStats,
    /// Fraction of slots with `N ≥ U`.
    pub tail_above_u: BatchStats,
    /// Matched mass per slot.
    pub throughput: BatchStats,
    /// Mean waiting customers.
    pub mean_q_c: BatchStats,
    /// Largest `|Σb - Σm - q_c|` seen over the run.
    pub conservation_drift: f64,
}

impl SimReport {
    /// Pools two independent runs of the same configuration.
    pub fn merge(&self, other: &SimReport) -> SimReport {
        SimReport {
            horizon: self.horizon + other.horizon,
            warmup: self.warmup.max(other.warmup),
            seed: self.seed.min(other.seed),
            replications: self.replications + other.replications,
            profit_rate: self.profit_rate.merge(&other.profit_rate),
            outage_prob: self.outage_prob.merge(&other.outage_prob),
            mean_n: self.mean_n.merge(&other.mean_n),
            mean_w: self.mean_w.merge(&other.mean_w),
            frac_high: self.frac_high.merge(&other.frac_high),
            frac_low: self.frac_low.merge(&other.frac_low),
            tail_above_u: self.tail_above_u.merge(&other.tail_above_u),
            throughput: self.throughput.merge(&other.throughput),
            mean_q_c: self.mean_q_c.merge(&other.mean_q_c),
            conservation_drift: self.conservation_drift.max(other.conservation_drift),
            ..self.clone()
        }
    }
}

/// Runs the matcher from an empty system for `warmup + horizon` slots on
/// stream 0 of `seed`; statistics cover the last `horizon` slots.
pub fn simulate(cfg: &QueueConfig, horizon: u64, warmup: u64, seed: u64) -> Result<SimReport> {
    simulate_stream(cfg, horizon, warmup, seed, 0)
}

/// As [`simulate`] on an explicit stream of `seed`.
pub fn simulate_stream(cfg: &QueueConfig, horizon: u64, warmup: u64, seed: u64, stream_id: u64) -> Result<SimReport> {
    if horizon < 2 * DEFAULT_BATCHES as u64 {
        return Err(Error::ConfigInvalid(format!(
            "horizon {horizon} is too short for {DEFAULT_BATCHES} batches"
        )));
    }
    let mut rng = RngHandle::new(seed, stream_id);
    let mut servers = ArrivalProcess::new(cfg.server_arrivals(), cfg.lambda())?;
    let mut customers = ArrivalProcess::new(cfg.customer_arrivals(), cfg.customer_rate())?;

    let acc = || BatchAccumulator::new(horizon, DEFAULT_BATCHES);
    let (mut profit, mut outage, mut mean_n, mut mean_w) = (acc()?, acc()?, acc()?, acc()?);
    let (mut high, mut tail, mut thru, mut q_c) = (acc()?, acc()?, acc()?, acc()?);

    let low_mode = cfg.mu_star() - cfg.delta();
    let half_u = 0.5 * cfg.u();
    let u = cfg.u();

    // waiting customers in arrival order: (arrival slot, mass)
    let mut fifo: VecDeque<(u64, f64)> = VecDeque::new();
    let mut arrived = CompensatedSum::default();
    let mut departed = CompensatedSum::default();
    let mut drift = 0.0f64;

    let mut state = QueueState::default();
    for t in 0..warmup + horizon {
        let a = servers.sample(&mut rng);
        let b = customers.sample(&mut rng);
        let n = state.n();
        let out = step(state, a, b, cfg);
        let m = out.matched;

        let mut waited = 0.0;
        let mut left = m;
        while left > 0.0 {
            let Some(front) = fifo.front_mut() else { break };
            let take = front.1.min(left);
            waited += take * (t - front.0) as f64;
            left -= take;
            front.1 -= take;
            if front.1 <= 1e-12 {
                fifo.pop_front();
            }
        }
        if b > 0 {
            fifo.push_back((t, b as f64));
        }
        arrived.add(b as f64);
        departed.add(m);

        if t >= warmup {
            profit.push(out.profit);
            outage.push(if n < low_mode { 1.0 } else { 0.0 });
            mean_n.push(n);
            mean_w.push_ratio(waited, m);
            high.push(if n > half_u { 1.0 } else { 0.0 });
            tail.push(if n >= u { 1.0 } else { 0.0 });
            thru.push(m);
            q_c.push(state.q_c);
        }
        state = out.next;
        if t % 4096 == 0 || t + 1 == warmup + horizon {
            drift = drift.max((arrived.value() - departed.value() - state.q_c).abs());
        }
    }

    let frac_high = high.finish();
    let frac_low = BatchStats::from_batch_means(frac_high.batch_means.iter().map(|h| 1.0 - h).collect());
    Ok(SimReport {
        u,
        mu_star: cfg.mu_star(),
        delta: cfg.delta(),
        p_eff: cfg.p_eff(),
        horizon,
        warmup,
        seed,
        replications: 1,
        profit_rate: profit.finish(),
        outage_prob: outage.finish(),
        mean_n: mean_n.finish(),
        mean_w: mean_w.finish(),
        frac_high,
        frac_low,
        tail_above_u: tail.finish(),
        throughput: thru.finish(),
        mean_q_c: q_c.finish(),
        conservation_drift: drift,
    })
}

/// Independent replications on streams `0..replications`, run in parallel
/// and pooled. The result does not depend on scheduling.
pub fn simulate_replications(
    cfg: &QueueConfig,
    horizon: u64,
    warmup: u64,
    seed: u64,
    replications: u64,
) -> Result<SimReport> {
    if replications == 0 {
        return Err(Error::ConfigInvalid("need at least one replication".into()));
    }
    let reports = (0..replications)
        .into_par_iter()
        .map(|k| simulate_stream(cfg, horizon, warmup, seed, k))
        .collect::<Result<Vec<_>>>()?;
    let mut merged = reports[0].clone();
    for r in &reports[1..] {
        merged = merged.merge(r);
    }
    Ok(merged)
}

/// `V(p*·μ(p*))`, a ceiling on the long-run profit of any pricing and
/// matching policy.
pub fn profit_upper_bound(demand: &DemandCurve, lambda: f64, profit_fn: ProfitFn) -> Result<f64> {
    let c = solve_pstar(demand, lambda)?;
    Ok(profit_fn.apply(c.p_star * c.mu_star))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::queue::ArrivalKind;

    fn cfg(u: f64) -> QueueConfig {
        QueueConfig::with_target_rate(1.0, 0.1, u).unwrap().build().unwrap()
    }

    #[test]
    fn upper_bound_examples() {
        let d = DemandCurve::linear(2.0, 1.0).unwrap();
        assert!((profit_upper_bound(&d, 1.1, ProfitFn::Identity).unwrap() - 1.0).abs() < 1e-12);
        let log = profit_upper_bound(&d, 1.1, ProfitFn::Log1p).unwrap();
        assert!((log - std::f64::consts::LN_2).abs() < 1e-12);
        let eq = profit_upper_bound(&d, 0.8, ProfitFn::Identity).unwrap();
        assert!((eq - 0.96).abs() < 1e-12);
    }

    #[test]
    fn short_run_is_deterministic() {
        let c = cfg(50.0);
        let a = simulate(&c, 20_000, 2_000, 17).unwrap();
        let b = simulate(&c, 20_000, 2_000, 17).unwrap();
        assert_eq!(a, b);
        let other = simulate(&c, 20_000, 2_000, 18).unwrap();
        assert_ne!(a.mean_n, other.mean_n);
    }

    #[test]
    fn report_invariants() {
        let r = simulate(&cfg(50.0), 200_000, 20_000, 5).unwrap();
        assert!((r.frac_high.overall_mean + r.frac_low.overall_mean - 1.0).abs() < 1e-12);
        assert!(r.outage_prob.overall_mean <= r.frac_low.overall_mean);
        assert!(r.conservation_drift < 1e-6);
        assert!(r.profit_rate.overall_mean <= 1.0 + r.profit_rate.ci_halfwidth);
        assert!(r.tail_above_u.overall_mean <= r.frac_high.overall_mean);
    }

    #[test]
    fn deterministic_arrivals_never_stall() {
        let c = QueueConfig::with_target_rate(1.0, 0.1, 50.0)
            .unwrap()
            .customer_arrivals(ArrivalKind::Deterministic)
            .server_arrivals(ArrivalKind::Deterministic)
            .build()
            .unwrap();
        let r = simulate(&c, 100_000, 10_000, 1).unwrap();
        assert_eq!(r.outage_prob.overall_mean, 0.0);
        assert!((r.throughput.overall_mean - 1.0).abs() < 1e-3);
    }

    #[test]
    fn replications_merge_in_any_order() {
        let c = cfg(50.0);
        let a = simulate_stream(&c, 10_000, 1_000, 3, 0).unwrap();
        let b = simulate_stream(&c, 10_000, 1_000, 3, 1).unwrap();
        assert_eq!(a.merge(&b), b.merge(&a));
        let pooled = simulate_replications(&c, 10_000, 1_000, 3, 2).unwrap();
        assert_eq!(pooled, a.merge(&b));
        assert_eq!(pooled.profit_rate.n_batches, 2 * DEFAULT_BATCHES);
    }

    #[test]
    fn too_short_horizon() {
        assert!(matches!(simulate(&cfg(50.0), 10, 0, 1), Err(Error::ConfigInvalid(_))));
    }
}
