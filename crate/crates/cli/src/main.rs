use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use gridconf_core::grid::{load_network, resolve_dataset};
use gridconf_core::{BranchId, Network};

mod compare;
mod config;
mod enumerate;
mod evaluate;
mod train;

use config::ReliabilityArgs;

/// Reliability-driven reconfiguration of radial distribution networks.
#[derive(Debug, Parser)]
#[command(name = "gridconf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a Q-learning agent and write the episode log, curves and best configuration
    Train {
        /// `33`, `69`, or a dataset directory
        #[arg(long)]
        dataset: String,
        /// TOML file with [train] and [reliability] sections
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory (created if missing)
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the configured episode count
        #[arg(long)]
        episodes: Option<usize>,
        /// Running-mean window for curves.csv
        #[arg(long, default_value_t = 100)]
        window: usize,
        #[command(flatten)]
        reliability: ReliabilityArgs,
    },
    /// Check constraints and compute curtailed power for one open set
    Evaluate {
        #[arg(long)]
        dataset: String,
        /// Comma-separated open branch ids, e.g. 7,14,26,33,34
        #[arg(long, value_delimiter = ',', required = true)]
        open: Vec<u32>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        reliability: ReliabilityArgs,
    },
    /// Exhaustively search every open set for the minimum curtailed power
    Enumerate {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = gridconf_core::oracle::DEFAULT_TOP_K)]
        top_k: usize,
        /// Worker threads; defaults to the available parallelism
        #[arg(long)]
        workers: Option<usize>,
        /// Where to write the JSON report
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        reliability: ReliabilityArgs,
    },
    /// Compare a training run against an enumeration report
    Compare {
        /// Run directory written by `train`
        #[arg(long)]
        run: PathBuf,
        /// Report written by `enumerate`
        #[arg(long)]
        oracle: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

pub(crate) fn load_dataset(dataset: &str) -> Result<Network> {
    let text = resolve_dataset(dataset).with_context(|| format!("locating dataset {dataset}"))?;
    load_network(&text).with_context(|| format!("loading dataset {dataset}"))
}

/// `{7,14,26}`
pub(crate) fn braced(ids: &[BranchId]) -> String {
    let parts: Vec<String> = ids.iter().map(|b| b.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            dataset,
            config,
            out,
            seed,
            episodes,
            window,
            reliability,
        } => train::run(train::TrainArgs {
            dataset,
            config,
            out,
            seed,
            episodes,
            window,
            reliability,
        }),
        Command::Evaluate {
            dataset,
            open,
            json,
            config,
            reliability,
        } => evaluate::run(&dataset, &open, json, config.as_deref(), &reliability),
        Command::Enumerate {
            dataset,
            top_k,
            workers,
            out,
            config,
            reliability,
        } => enumerate::run(
            &dataset,
            top_k,
            workers,
            &out,
            config.as_deref(),
            &reliability,
        ),
        Command::Compare { run, oracle, json } => compare::run(&run, &oracle, json),
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
