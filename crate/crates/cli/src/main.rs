mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use config::ConfigArgs;
use error::CliError;

/// Signature kernels, Gram matrices and two-sample tests for sequential data.
#[derive(Parser)]
#[command(name = "sigkern", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel value between two sequences, with per-level values for dp.
    Kernel {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// Sequence id in X when it holds several.
        #[arg(long = "x-id")]
        x_id: Option<String>,
        #[arg(long = "y-id")]
        y_id: Option<String>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Gram matrix of a dataset, written as .csv or .bin.
    Gram {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace the exact Gram with a rank-r Nyström reconstruction.
        #[arg(long = "nystrom-rank")]
        nystrom_rank: Option<usize>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Permutation two-sample test; with --grid the statistic is the sup over the grid.
    Test2 {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// MMD² for every grid entry and their maximum.
    Sweep {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn to_json(report: &impl Serialize) -> String {
    serde_json::to_string_pretty(report).expect("reports serialize")
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Kernel {
            x,
            y,
            x_id,
            y_id,
            config,
        } => {
            let cfg = config.resolve()?;
            commands::kernel(cfg, &x, &y, x_id.as_deref(), y_id.as_deref()).map(|r| to_json(&r))
        }
        Command::Gram {
            data,
            out,
            nystrom_rank,
            config,
        } => commands::gram_cmd(config.resolve()?, &data, &out, nystrom_rank).map(|r| to_json(&r)),
        Command::Test2 { x, y, grid, config } => {
            commands::test2(config.resolve()?, &x, &y, grid.as_deref()).map(|r| to_json(&r))
        }
        Command::Sweep { x, y, grid, config } => {
            commands::sweep(config.resolve()?, &x, &y, &grid).map(|r| to_json(&r))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sigkern: {e}");
            e.exit_code()
        }
    }
}
