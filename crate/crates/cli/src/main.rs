//! `ricciwarp` - config-driven runner for the prescribed Ricci curvature
//! solver. Subcommands: `validate` (hypothesis checks only), `solve` (full
//! pipeline with certified artifacts), `sweep` (parameter sweeps).

mod commands;
mod config;
mod plot;
mod report;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ricciwarp", version, about = "prescribed Ricci curvature solver for doubly warped products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the tensor hypotheses and write validation.json
    Validate(CommonArgs),
    /// Solve, certify, and write profile/solution/regularity artifacts
    Solve(CommonArgs),
    /// Run the [sweep] section point by point and aggregate sweep.csv
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Concurrent sweep workers
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

#[derive(clap::Args)]
struct CommonArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output].dir; default "out")
    #[arg(long)]
    out: Option<PathBuf>,
}

fn out_dir(common: &CommonArgs, cfg: &config::RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Validate(common) | Command::Solve(common) => {
            match commands::load_config(&common.config) {
                Ok(cfg) => {
                    let out = out_dir(common, &cfg);
                    match &cli.command {
                        Command::Validate(_) => commands::cmd_validate(&cfg, &out),
                        _ => commands::cmd_solve(&cfg, &out),
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    commands::EXIT_USAGE
                }
            }
        }
        Command::Sweep { common, workers } => match commands::load_config(&common.config) {
            Ok(cfg) => {
                let out = out_dir(common, &cfg);
                commands::cmd_sweep(&cfg, &out, *workers)
            }
            Err(e) => {
                eprintln!("error: {e}");
                commands::EXIT_USAGE
            }
        },
    };
    ExitCode::from(code as u8)
}
