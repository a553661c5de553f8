//! Experiment runner CLI.
//!
//! Subcommands:
//! - `run --config <path>`: execute an experiment, writing one CSV per
//!   (optimizer, seed) and a manifest.
//! - `compare <dir> [--out <svg>]`: summarize a run directory and render a
//!   log-log convergence plot.
//! - `verify <dir> [--strict]`: replay convergence-bound checks against the
//!   artifacts.
//! - `gen-data`: write seeded datasets in LIBSVM text format.
//!
//! Exit codes: 0 success, 1 failed checks or internal error, 2 config
//! error, 3 reference-solve failure (partial outputs), 4 strict-mode
//! verification prerequisites unmet.

mod artifacts;
mod compare;
mod config;
mod gen_data;
mod runner;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "unixgrad", version, about = "Constrained convex optimization workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config (or a manifest of a previous run)
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a run directory and render a convergence plot
    Compare {
        dir: PathBuf,
        /// Output SVG path (defaults to <dir>/compare.svg)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check theorem bounds and regret conversion on a completed run
    Verify {
        dir: PathBuf,
        /// Fail (exit 4) when prerequisites for a check are missing
        #[arg(long)]
        strict: bool,
    },
    /// Generate a seeded dataset in LIBSVM text format
    GenData {
        /// Dataset family: synthetic-ls | libsvm
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 683)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Design-entry standard deviation (synthetic-ls)
        #[arg(long, default_value_t = 1.0)]
        entry_sigma: f64,
        /// Observation noise variance (synthetic-ls)
        #[arg(long, default_value_t = 1e-3)]
        noise_variance: f64,
        /// Class separation (libsvm)
        #[arg(long, default_value_t = 1.8)]
        separation: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Compare { dir, out } => match compare::cmd_compare(&dir, out.as_deref()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("compare failed: {e:#}");
                2
            }
        },
        Command::Verify { dir, strict } => match verify::cmd_verify(&dir, strict) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("verify failed: {e:#}");
                2
            }
        },
        Command::GenData {
            kind,
            n,
            d,
            seed,
            entry_sigma,
            noise_variance,
            separation,
            out,
        } => {
            let args = gen_data::GenDataArgs {
                kind,
                n,
                d,
                seed,
                entry_sigma,
                noise_variance,
                separation,
            };
            match gen_data::cmd_gen_data(&args, &out) {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("gen-data failed: {e:#}");
                    2
                }
            }
        }
    };
    ExitCode::from(code)
}

fn cmd_run(config_path: &std::path::Path) -> u8 {
    let config = match config::load_config(config_path) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return 2;
        }
    };
    let dir = runner::resolve_output_dir(&config);
    match runner::execute(&config, &dir) {
        Ok(reference_failed) => {
            if reference_failed {
                3
            } else {
                0
            }
        }
        Err(e) => {
            let message = format!("{e:#}");
            eprintln!("run failed: {message}");
            // problem-assembly problems are config errors; anything after
            // the run started is an internal failure
            if message.contains("config")
                || message.contains("dimension")
                || message.contains("cannot read")
            {
                2
            } else {
                1
            }
        }
    }
}
