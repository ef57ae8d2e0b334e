//! `securescan`: train, scan, evaluate, and serve the three-layer triage
//! engine.
//!
//! Exit codes: 0 success, 1 operational error, 2 usage error, and 3 when a
//! scan verdict is Malicious (for scripting).

mod engine;
mod evaluate;
mod response;
mod scan;
mod serve;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use securescan_core::config::AppConfig;

#[derive(Parser)]
#[command(
    name = "securescan",
    version,
    about = "Three-layer URL/file triage: heuristics, calibrated classifier, threat intelligence"
)]
struct Cli {
    /// TOML config file; defaults to $SECURESCAN_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a `url,label` corpus and write a bundle.
    Train(train::TrainArgs),
    /// Scan one URL, hash, or file against a bundle.
    Scan(scan::ScanArgs),
    /// Evaluate a bundle on a labeled corpus, optionally against baselines.
    Evaluate(evaluate::EvaluateArgs),
    /// Serve the HTTP scan API.
    Serve(serve::ServeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(config) => config,
        Err(error) => {
            eprintln!("error: {error:#}");
            return ExitCode::from(1);
        }
    };
    let outcome = match cli.command {
        Command::Train(args) => train::run(args, &config),
        Command::Scan(args) => scan::run(args, &config),
        Command::Evaluate(args) => evaluate::run(args, &config),
        Command::Serve(args) => serve::run(args, &config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}

fn load_config(flag: Option<&std::path::Path>) -> anyhow::Result<AppConfig> {
    if let Some(path) = flag {
        return Ok(AppConfig::load(path)?);
    }
    Ok(AppConfig::from_env()?.unwrap_or_default())
}
