//! `nls` — train, evaluate, explain and compare neural local smoothers.
//!
//! Exit codes: 0 success, 1 runtime error, 2 configuration error.

mod commands;
mod config;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl From<nls_core::Error> for CliError {
    fn from(e: nls_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "nls", version, about = "Neural local smoother experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV file, `sin:N[:SEED]` or `quadratic:N[:IRRELEVANT[:SEED]]`.
    #[arg(long)]
    data: String,
    /// Target column of a CSV file (default: last column).
    #[arg(long)]
    target: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write model.json plus its training trace.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Train a softmax classifier on integer class labels instead.
        #[arg(long)]
        classifier: bool,
    },
    /// Evaluate a saved model; prints metrics JSON.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        /// Also write metrics.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Warm-started sweep over increasing penalty strengths.
    SweepLambda {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Also report the extension gap on a 3/4–1/4 split of the test fold.
        #[arg(long)]
        extend: bool,
    },
    /// Grid-searched comparison of NLS, NN, LLS and OLS.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Explain predictions of a saved model on the given instances.
    Explain {
        /// Saved smoother network (omit with --lls-train).
        #[arg(long, required_unless_present = "lls_train")]
        model: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Run the extension procedure on a 3/4–1/4 split of the instances.
        #[arg(long)]
        extend: bool,
        /// Seed of the extension split.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explain with a local linear smoother fitted to this data instead.
        #[arg(long, conflicts_with = "model")]
        lls_train: Option<String>,
        /// Bandwidth of the local linear smoother.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
