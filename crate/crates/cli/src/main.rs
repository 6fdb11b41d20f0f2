use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use epiext_cli::commands;
use epiext_cli::config::{ExperimentConfig, MAX_SEED};

#[derive(Parser)]
#[command(name = "epiext", version, about = "Extinction regimes, simulation and hitting times for locality epidemics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides [output] dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed; overrides [simulation] seed.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
    seed: Option<u64>,

    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Regime verdict from every applicable threshold.
    Classify,
    /// Stochastic ensemble.
    Simulate,
    /// Expected hitting times of a birth–death chain.
    Hitting,
    /// δ·E[T_n]/ln n for one or more chains.
    Asymptote,
    /// Mean-field trajectory.
    Meanfield,
}

fn run(cli: Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let path = cli.config.context("--config is required")?;
    let mut cfg = ExperimentConfig::load(&path)?;
    if let (Some(seed), Some(sim)) = (cli.seed, cfg.simulation.as_mut()) {
        sim.seed = seed;
    }
    let out = cli
        .out
        .or_else(|| cfg.output.as_ref().map(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Classify => commands::classify(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Hitting => commands::hitting(&cfg, &out),
        Command::Asymptote => commands::asymptote(&cfg, &out),
        Command::Meanfield => commands::meanfield(&cfg, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
