use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod dataset;

#[derive(Parser)]
#[command(name = "rltrack", version, about = "Reinforcement-learning tractography")]
struct Cli {
    /// Worker threads for batched tracking and scoring.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic phantom (the desk phantom without --config).
    Phantom {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an agent.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track a phantom with a trained policy.
    Track {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        phantom: PathBuf,
        /// Seeds per WM voxel (training value by default).
        #[arg(long)]
        npv: Option<usize>,
        /// Step size in mm; rescaled from training by voxel size by default.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        min_length: Option<f64>,
        #[arg(long)]
        max_length: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a tractogram against a phantom's ground truth.
    Score {
        #[arg(long)]
        tractogram: PathBuf,
        #[arg(long)]
        phantom: PathBuf,
        #[arg(long, default_value_t = 20.0)]
        min_length: f64,
        #[arg(long, default_value_t = 200.0)]
        max_length: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Grid search over hyperparameters, ranked by VC then OL.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deterministic peak-following tractography.
    Baseline {
        #[arg(long)]
        phantom: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        npv: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        anyhow::ensure!(n > 0, "invalid config: --workers must be > 0");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Phantom { config, out } => commands::phantom(config.as_deref(), &out),
        Command::Train { config, seed, out } => commands::train(config.as_deref(), seed, out.as_deref()),
        Command::Track { checkpoint, phantom, npv, step, min_length, max_length, seed, out } => {
            commands::track(commands::TrackArgs {
                checkpoint: &checkpoint,
                phantom: &phantom,
                npv,
                step,
                min_length,
                max_length,
                seed,
                out: &out,
            })
        }
        Command::Score { tractogram, phantom, min_length, max_length, out } => {
            commands::score_cmd(&tractogram, &phantom, min_length, max_length, &out)
        }
        Command::Sweep { config, grid, seed, out } => commands::sweep(config.as_deref(), &grid, seed, out.as_deref()),
        Command::Baseline { phantom, config, npv, seed, out } => {
            commands::baseline(phantom.as_deref(), config.as_deref(), npv, seed, &out)
        }
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
