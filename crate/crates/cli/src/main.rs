use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod error;
mod format;
mod loss;
mod queue;

use config::{merge, BruteForceArgs, Common, LossBoundsArgs, LossSweepArgs, QueueRunArgs, QueueSweepArgs};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "twosided", version, about = "Loss-model pricing and bi-modal matching experiments")]
struct Cli {
    /// JSON file whose keys override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Birth-death loss model.
    #[command(subcommand)]
    Loss(LossCommand),
    /// Discrete-time matching queue.
    #[command(subcommand)]
    Queue(QueueCommand),
}

#[derive(Debug, Subcommand)]
enum LossCommand {
    /// Both objectives over the bang-bang family (CSV).
    Sweep(LossSweepArgs),
    /// Universal bounds, static and bang-bang optima (JSON).
    Bounds(LossBoundsArgs),
    /// Exhaustive minimum-π₀ search on small chains (JSON).
    Bruteforce(BruteForceArgs),
}

#[derive(Debug, Subcommand)]
enum QueueCommand {
    /// Outage, delay and profit across thresholds U (CSV).
    Sweep(QueueSweepArgs),
    /// A single configuration (JSON).
    Run(QueueRunArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = Common {
        seed: cli.seed,
        out: cli.out,
    };
    let path = cli.config.as_deref();
    let (text, common) = match cli.command {
        Command::Loss(LossCommand::Sweep(a)) => {
            let (a, c) = merge(&a, common, path, "loss_sweep")?;
            (loss::run_loss_sweep(&a)?, c)
        }
        Command::Loss(LossCommand::Bounds(a)) => {
            let (a, c) = merge(&a, common, path, "loss_bounds")?;
            (loss::run_loss_bounds(&a)?, c)
        }
        Command::Loss(LossCommand::Bruteforce(a)) => {
            let (a, c) = merge(&a, common, path, "loss_bruteforce")?;
            (loss::run_loss_bruteforce(&a)?, c)
        }
        Command::Queue(QueueCommand::Sweep(a)) => {
            let (a, c) = merge(&a, common, path, "queue_sweep")?;
            (queue::run_queue_sweep(&a, c.seed)?, c)
        }
        Command::Queue(QueueCommand::Run(a)) => {
            let (a, c) = merge(&a, common, path, "queue_run")?;
            (queue::run_queue_run(&a, c.seed)?, c)
        }
    };
    match common.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("twosided: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
