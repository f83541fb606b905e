use rayon::prelude::*;
use serde::Serialize;

use twosided::markov::MomentCap;
use twosided::optimize::{
    bang_bang_min_pi0, brute_force_minimizers, competitive_cases, is_bang_bang, optimal_static_price,
    optimize_bangbang, universal_bounds, BangBangOptimum, BoundsReport, CompetitiveReport, MinPi0,
};
use twosided::pricing::{evaluate, Policy, PriceModel};
use twosided::Error as CoreError;

use crate::config::{BruteForceArgs, LossBoundsArgs, LossSweepArgs, ModelArgs};
use crate::error::CliError;
use crate::format::{cell, to_json};

fn model(m: &ModelArgs, w: f64) -> Result<PriceModel, CliError> {
    Ok(PriceModel::new(m.alpha, m.beta, m.theta, m.p_min, m.p_max, m.lambda, w)?)
}

/// Points `start, start + step, …` up to `stop`.
pub fn x_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && start >= 0.0) {
        return Err(CliError::Config(format!(
            "x grid: need finite start >= 0 and step > 0, got start {start}, step {step}"
        )));
    }
    if stop < start {
        return Err(CliError::Config(format!("x grid is empty: stop {stop} < start {start}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// CSV of `(x, C, C_rel)` over the bang-bang family for each weight, with
/// grid argmax rows for both objectives after each curve.
pub fn run_loss_sweep(args: &LossSweepArgs) -> Result<String, CliError> {
    if args.ws.is_empty() {
        return Err(CliError::Config("ws: need at least one holding-cost weight".into()));
    }
    let xs = x_grid(args.x_start, args.x_stop, args.x_step)?;
    let models = args
        .ws
        .iter()
        .map(|&w| model(&args.model, w))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(m) = models.iter().find(|m| !m.is_linear()) {
        return Err(CoreError::RequiresLinearModel(m.theta()).into());
    }
    let cells: Vec<(usize, f64)> = (0..models.len())
        .flat_map(|i| xs.iter().map(move |&x| (i, x)))
        .collect();
    let values = cells
        .par_iter()
        .map(|&(i, x)| evaluate(&models[i], &Policy::BangBang(x)).map(|o| (o.c, o.c_rel)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Numerical(e.to_string());
    out.write_record(["kind", "w", "x", "c", "c_rel"]).map_err(csv_err)?;
    for (i, w) in args.ws.iter().enumerate() {
        let curve = &values[i * xs.len()..(i + 1) * xs.len()];
        let w_s = cell(*w, "w")?;
        for (x, (c, c_rel)) in xs.iter().zip(curve) {
            out.write_record(["curve", &w_s, &cell(*x, "x")?, &cell(*c, "C")?, &cell(*c_rel, "C_rel")?])
                .map_err(csv_err)?;
        }
        let argmax = |pick: fn(&(f64, f64)) -> f64| {
            (0..curve.len()).fold(0, |best, k| if pick(&curve[k]) > pick(&curve[best]) { k } else { best })
        };
        for (kind, k) in [("argmax_c", argmax(|v| v.0)), ("argmax_c_rel", argmax(|v| v.1))] {
            let (c, c_rel) = curve[k];
            out.write_record([kind, &w_s, &cell(xs[k], "x")?, &cell(c, "C")?, &cell(c_rel, "C_rel")?])
                .map_err(csv_err)?;
        }
    }
    String::from_utf8(out.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?)
        .map_err(|e| CliError::Numerical(e.to_string()))
}

#[derive(Debug, Serialize)]
struct PriceValue {
    price: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct BoundsOutput<'a> {
    model: &'a ModelArgs,
    w: f64,
    bounds: BoundsReport,
    #[serde(rename = "static")]
    static_optimum: PriceValue,
    /// Linear-demand closed form; null for other demand shapes.
    static_closed_form: Option<PriceValue>,
    bang_bang: Option<BangBangOptimum>,
    gamma: f64,
    competitive: Option<CompetitiveReport>,
    competitive_error: Option<String>,
}

pub fn run_loss_bounds(args: &LossBoundsArgs) -> Result<String, CliError> {
    let m = model(&args.model, args.w)?;
    let s = optimal_static_price(&m)?;
    let bang_bang = if m.is_linear() {
        Some(optimize_bangbang(&m, args.x_max, args.x_grid)?)
    } else {
        None
    };
    let (competitive, competitive_error) = match competitive_cases(&m, args.gamma) {
        Ok(r) => (Some(r), None),
        Err(e @ CoreError::InfeasibleRate { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    to_json(&BoundsOutput {
        model: &args.model,
        w: args.w,
        bounds: universal_bounds(&m),
        static_optimum: PriceValue {
            price: s.price,
            value: s.value,
        },
        static_closed_form: s.closed_form.then_some(PriceValue {
            price: s.price,
            value: s.value,
        }),
        bang_bang,
        gamma: args.gamma,
        competitive,
        competitive_error,
    })
}

#[derive(Debug, Serialize)]
struct Instance {
    n_states: usize,
    cap: f64,
    feasible: bool,
    minimizer: Option<MinPi0>,
    minimizer_count: usize,
    all_minimizers_bang_bang: bool,
    /// Best bang-bang profile with a continuous threshold ratio.
    continuous_bang_bang: Option<MinPi0>,
}

#[derive(Debug, Serialize)]
struct BruteForceOutput {
    levels: Vec<f64>,
    instances: Vec<Instance>,
    all_bang_bang: bool,
}

pub fn run_loss_bruteforce(args: &BruteForceArgs) -> Result<String, CliError> {
    if args.n_states.is_empty() || args.caps.is_empty() || args.levels.is_empty() {
        return Err(CliError::Config("n_states, levels and caps must be non-empty".into()));
    }
    let low = args.levels.iter().copied().fold(f64::INFINITY, f64::min);
    let high = args.levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cells = Vec::new();
    for &n in &args.n_states {
        for &cap in &args.caps {
            cells.push((n, MomentCap::new(cap)?));
        }
    }
    let instances = cells
        .par_iter()
        .map(|&(n, cap)| -> Result<Instance, CliError> {
            let winners = match brute_force_minimizers(n, &args.levels, cap) {
                Ok(w) => w,
                Err(CoreError::Infeasible(_)) => Vec::new(),
                Err(e) => return Err(e.into()),
            };
            let continuous = match bang_bang_min_pi0(n, low, high, cap) {
                Ok(b) => Some(b),
                Err(CoreError::Infeasible(_)) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(Instance {
                n_states: n,
                cap: cap.value(),
                feasible: !winners.is_empty(),
                all_minimizers_bang_bang: winners.iter().all(|w| is_bang_bang(&w.rho, low, high)),
                minimizer_count: winners.len(),
                minimizer: winners.into_iter().next(),
                continuous_bang_bang: continuous,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    to_json(&BruteForceOutput {
        levels: args.levels.clone(),
        all_bang_bang: instances.iter().all(|i| i.all_minimizers_bang_bang),
        instances,
    })
}
