//! Experiment configuration: command-line flags and an optional JSON file
//! share one shape; keys present in the file win over flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use twosided::queue::{ArrivalKind, DemandCurve, ProfitFn};

use crate::error::CliError;

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelArgs {
    /// Demand slope in `g(p) = (β - αp)^θ`.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 3.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_min: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p_max: f64,
    /// Server arrival rate.
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LossSweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Holding-cost weights, one curve each.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1])]
    pub ws: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub x_start: f64,
    #[arg(long, default_value_t = 20.0)]
    pub x_stop: f64,
    #[arg(long, default_value_t = 0.1)]
    pub x_step: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LossBoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    pub w: f64,
    /// Slack factor of the competitive static price.
    #[arg(long, default_value_t = 1.2)]
    pub gamma: f64,
    #[arg(long, default_value_t = 50.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 0.05)]
    pub x_grid: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BruteForceArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5])]
    pub n_states: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 1.5])]
    pub levels: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.75, 1.0, 1.5, 2.0])]
    pub caps: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimArgs {
    #[arg(long, default_value_t = 2.0)]
    pub decay_exponent: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sigma_c_sq: f64,
    /// `identity` or `log1p`.
    #[arg(long, default_value = "identity")]
    pub profit_fn: String,
    /// `poisson`, `deterministic` or `batch:SIZE`.
    #[arg(long, default_value = "poisson")]
    pub server_arrivals: String,
    #[arg(long, default_value = "poisson")]
    pub customer_arrivals: String,
    #[arg(long, default_value_t = 10_000_000)]
    pub horizon: u64,
    /// Defaults to a tenth of the horizon.
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
}

impl SimArgs {
    pub fn warmup(&self) -> u64 {
        self.warmup.unwrap_or(self.horizon / 10)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QueueSweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0])]
    pub mu_stars: Vec<f64>,
    #[arg(long = "u-list", value_delimiter = ',', default_values_t = vec![50.0, 100.0, 200.0, 400.0])]
    pub us: Vec<f64>,
    /// `λ - μ*`.
    #[arg(long, default_value_t = 0.1)]
    pub gap: f64,
    /// Server cap as a multiple of U.
    #[arg(long, default_value_t = 4.0)]
    pub s_bar_factor: f64,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QueueRunArgs {
    /// `linear:C,SLOPE`, `power:BETA,ALPHA,THETA` or `table:P1,P2,..;R1,R2,..`.
    #[arg(long, default_value = "linear:2,1")]
    pub demand: String,
    #[arg(long, default_value_t = 1.1)]
    pub lambda: f64,
    #[arg(long, default_value_t = 100.0)]
    pub u: f64,
    #[arg(long)]
    pub s_bar: Option<f64>,
    /// Overrides the scheduled δ.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon_rel: f64,
    #[command(flatten)]
    pub sim: SimArgs,
}

/// Settings every verb accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct Common {
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// Merges the JSON file at `path` over `flags`.
///
/// Top-level `mode`, `seed` and `out` keys are handled here; `mode`, when
/// given, must name the verb being run.
pub fn merge<T: Serialize + DeserializeOwned + Clone>(
    flags: &T,
    common: Common,
    path: Option<&Path>,
    mode: &str,
) -> Result<(T, Common), CliError> {
    let Some(path) = path else {
        return Ok((flags.clone(), common));
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    merge_str(flags, common, &text, mode).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn merge_str<T: Serialize + DeserializeOwned>(
    flags: &T,
    mut common: Common,
    text: &str,
    mode: &str,
) -> Result<(T, Common), CliError> {
    let file: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let Value::Object(mut file) = file else {
        return Err(CliError::Config("top level must be a JSON object".into()));
    };
    if let Some(m) = file.remove("mode") {
        if m.as_str() != Some(mode) {
            return Err(CliError::Config(format!("field `mode`: file is for {m}, running \"{mode}\"")));
        }
    }
    if let Some(seed) = file.remove("seed") {
        common.seed = seed
            .as_u64()
            .ok_or_else(|| CliError::Config(format!("field `seed`: expected a non-negative integer, got {seed}")))?;
    }
    if let Some(out) = file.remove("out") {
        let out = out
            .as_str()
            .ok_or_else(|| CliError::Config(format!("field `out`: expected a path string, got {out}")))?;
        common.out = Some(PathBuf::from(out));
    }
    let mut base = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))?;
    overlay(&mut base, file);
    let merged = serde_path_to_error::deserialize(base)
        .map_err(|e| CliError::Config(format!("field `{}`: {}", e.path(), e.inner())))?;
    Ok((merged, common))
}

fn overlay(base: &mut Value, file: Map<String, Value>) {
    let Value::Object(target) = base else {
        *base = Value::Object(file);
        return;
    };
    for (k, v) in file {
        match (target.get_mut(&k), v) {
            (Some(existing @ Value::Object(_)), Value::Object(inner)) => overlay(existing, inner),
            (_, v) => {
                target.insert(k, v);
            }
        }
    }
}

pub fn parse_profit_fn(s: &str) -> Result<ProfitFn, CliError> {
    match s {
        "identity" => Ok(ProfitFn::Identity),
        "log1p" => Ok(ProfitFn::Log1p),
        _ => Err(CliError::Config(format!("profit_fn: expected identity or log1p, got {s:?}"))),
    }
}

pub fn parse_arrivals(s: &str) -> Result<ArrivalKind, CliError> {
    match s {
        "poisson" => Ok(ArrivalKind::Poisson),
        "deterministic" => Ok(ArrivalKind::Deterministic),
        _ => s
            .strip_prefix("batch:")
            .and_then(|n| n.parse().ok())
            .map(|size| ArrivalKind::BernoulliBatch { size })
            .ok_or_else(|| {
                CliError::Config(format!("arrivals: expected poisson, deterministic or batch:SIZE, got {s:?}"))
            }),
    }
}

fn numbers(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("demand: bad number in {what} {s:?}: {e}")))
}

pub fn parse_demand(s: &str) -> Result<DemandCurve, CliError> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("demand: expected KIND:PARAMS, got {s:?}")))?;
    let curve = match kind {
        "linear" => match numbers(rest, "linear")?[..] {
            [c, slope] => DemandCurve::linear(c, slope),
            _ => return Err(CliError::Config("demand: linear takes C,SLOPE".into())),
        },
        "power" => match numbers(rest, "power")?[..] {
            [beta, alpha, theta] => DemandCurve::power(beta, alpha, theta),
            _ => return Err(CliError::Config("demand: power takes BETA,ALPHA,THETA".into())),
        },
        "table" => {
            let (p, r) = rest
                .split_once(';')
                .ok_or_else(|| CliError::Config("demand: table takes PRICES;RATES".into()))?;
            DemandCurve::table(numbers(p, "prices")?, numbers(r, "rates")?)
        }
        _ => return Err(CliError::Config(format!("demand: unknown kind {kind:?}"))),
    };
    Ok(curve?)
}
