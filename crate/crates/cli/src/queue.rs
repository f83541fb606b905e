use rayon::prelude::*;
use serde::Serialize;

use twosided::queue::{
    profit_upper_bound, simulate_replications, tau_star, ArrivalProcess, CriticalPrice, QueueConfig,
    QueueConfigBuilder, SimReport,
};

use crate::config::{parse_arrivals, parse_demand, parse_profit_fn, QueueRunArgs, QueueSweepArgs, SimArgs};
use crate::error::CliError;
use crate::format::{cell, to_json};

pub const SWEEP_COLUMNS: [&str; 16] = [
    "row",
    "U",
    "mu_star",
    "delta",
    "outage_prob",
    "outage_ci",
    "mean_n",
    "mean_w",
    "frac_high",
    "frac_low",
    "tail_above_u",
    "profit_rate",
    "jensen_bound",
    "mean_n_ci",
    "mean_w_ci",
    "profit_ci",
];

fn apply_sim(builder: QueueConfigBuilder, sim: &SimArgs) -> Result<QueueConfigBuilder, CliError> {
    Ok(builder
        .decay_exponent(sim.decay_exponent)
        .sigma_c_sq(sim.sigma_c_sq)
        .profit_fn(parse_profit_fn(&sim.profit_fn)?)
        .server_arrivals(parse_arrivals(&sim.server_arrivals)?)
        .customer_arrivals(parse_arrivals(&sim.customer_arrivals)?))
}

fn check_run_length(sim: &SimArgs) -> Result<(), CliError> {
    if sim.replications == 0 {
        return Err(CliError::Config("replications must be at least 1".into()));
    }
    if sim.horizon < 60 {
        return Err(CliError::Config(format!("horizon {} is too short for 30 batches", sim.horizon)));
    }
    Ok(())
}

/// Least-squares slope of `ln y` on `ln x` over the points with `y > 0`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Sweep cells in output order: `μ*` outer, `U` inner.
pub fn sweep_configs(args: &QueueSweepArgs) -> Result<Vec<QueueConfig>, CliError> {
    if args.mu_stars.is_empty() || args.us.is_empty() {
        return Err(CliError::Config("mu_stars and us must be non-empty".into()));
    }
    check_run_length(&args.sim)?;
    let mut cfgs = Vec::new();
    for &mu in &args.mu_stars {
        for &u in &args.us {
            let b = QueueConfig::with_target_rate(mu, args.gap, u)?.s_bar(args.s_bar_factor * u);
            cfgs.push(apply_sim(b, &args.sim)?.build()?);
        }
    }
    Ok(cfgs)
}

/// One row per `(μ*, U)` cell followed by a `loglog_slope` row per `μ*`;
/// the slope sits in the `outage_prob` column and is left empty when fewer
/// than two cells saw an outage.
pub fn run_queue_sweep(args: &QueueSweepArgs, seed: u64) -> Result<String, CliError> {
    let cfgs = sweep_configs(args)?;
    let (horizon, warmup, reps) = (args.sim.horizon, args.sim.warmup(), args.sim.replications);
    let reports = cfgs
        .par_iter()
        .map(|cfg| -> Result<(SimReport, f64), CliError> {
            let report = simulate_replications(cfg, horizon, warmup, seed, reps)?;
            let bound = profit_upper_bound(cfg.demand(), cfg.lambda(), cfg.profit_fn())?;
            Ok((report, bound))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Numerical(e.to_string());
    out.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    for (k, mu) in args.mu_stars.iter().enumerate() {
        let block = &reports[k * args.us.len()..(k + 1) * args.us.len()];
        for (r, bound) in block {
            out.write_record([
                "cell".to_string(),
                cell(r.u, "U")?,
                cell(r.mu_star, "mu_star")?,
                cell(r.delta, "delta")?,
                cell(r.outage_prob.overall_mean, "outage_prob")?,
                cell(r.outage_prob.ci_halfwidth, "outage_ci")?,
                cell(r.mean_n.overall_mean, "mean_n")?,
                cell(r.mean_w.overall_mean, "mean_w")?,
                cell(r.frac_high.overall_mean, "frac_high")?,
                cell(r.frac_low.overall_mean, "frac_low")?,
                cell(r.tail_above_u.overall_mean, "tail_above_u")?,
                cell(r.profit_rate.overall_mean, "profit_rate")?,
                cell(*bound, "jensen_bound")?,
                cell(r.mean_n.ci_halfwidth, "mean_n_ci")?,
                cell(r.mean_w.ci_halfwidth, "mean_w_ci")?,
                cell(r.profit_rate.ci_halfwidth, "profit_ci")?,
            ])
            .map_err(csv_err)?;
        }
        let points: Vec<(f64, f64)> = block.iter().map(|(r, _)| (r.u, r.outage_prob.overall_mean)).collect();
        let slope = loglog_slope(&points).map(|s| cell(s, "loglog_slope")).transpose()?;
        let mut row = vec![String::new(); SWEEP_COLUMNS.len()];
        row[0] = "loglog_slope".into();
        row[2] = cell(*mu, "mu_star")?;
        row[4] = slope.unwrap_or_default();
        out.write_record(&row).map_err(csv_err)?;
    }
    String::from_utf8(out.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?)
        .map_err(|e| CliError::Numerical(e.to_string()))
}

#[derive(Debug, Serialize)]
struct RunOutput<'a> {
    config: &'a QueueRunArgs,
    seed: u64,
    critical: CriticalPrice,
    p_eff: f64,
    epsilon: f64,
    delta: f64,
    s_bar: f64,
    jensen_bound: f64,
    /// Predicted outage decay rate for the customer arrival law.
    tau_star: Option<f64>,
    report: SimReport,
}

pub fn run_queue_run(args: &QueueRunArgs, seed: u64) -> Result<String, CliError> {
    check_run_length(&args.sim)?;
    let mut b = QueueConfig::builder(args.lambda, parse_demand(&args.demand)?, args.u).epsilon_rel(args.epsilon_rel);
    if let Some(s) = args.s_bar {
        b = b.s_bar(s);
    }
    if let Some(d) = args.delta {
        b = b.delta(d);
    }
    let cfg = apply_sim(b, &args.sim)?.build()?;
    let report = simulate_replications(&cfg, args.sim.horizon, args.sim.warmup(), seed, args.sim.replications)?;
    let customers = ArrivalProcess::new(cfg.customer_arrivals(), cfg.customer_rate())?;
    let tau = tau_star(cfg.mu_star(), cfg.delta(), |s| customers.log_mgf(s)).ok();
    to_json(&RunOutput {
        config: args,
        seed,
        critical: cfg.critical(),
        p_eff: cfg.p_eff(),
        epsilon: cfg.epsilon(),
        delta: cfg.delta(),
        s_bar: cfg.s_bar(),
        jensen_bound: profit_upper_bound(cfg.demand(), cfg.lambda(), cfg.profit_fn())?,
        tau_star: tau,
        report,
    })
}
