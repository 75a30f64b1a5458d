//! Command-line front end: reads a strict JSON configuration, runs the
//! requested pipeline and writes reports/curves into the output directory.
//!
//! Exit codes: 0 success, 1 error, 2 provably non-rationalizable game.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use oligeq_cli::config;
use oligeq_cli::error::CliError;
use oligeq_cli::run::{self, RunOutcome};

#[derive(Parser, Debug)]
#[command(
    name = "oligeq",
    about = "Construct and verify single-agent representations of resource extraction oligopolies"
)]
struct Args {
    /// Path to the JSON configuration document.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for reports and curve tables.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Override both verdict thresholds.
    #[arg(long)]
    tol: Option<f64>,

    /// Override the grid size.
    #[arg(long)]
    grid: Option<usize>,

    /// Override the eigenvector branch (plus|minus).
    #[arg(long)]
    branch: Option<String>,

    /// Override the constructed problem's discount.
    #[arg(long)]
    rho: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(RunOutcome::Success) => ExitCode::SUCCESS,
        Ok(RunOutcome::NotRationalizable) => ExitCode::from(2),
        Err(e) => {
            let envelope = serde_json::json!({ "error": e });
            eprintln!("{envelope}");
            ExitCode::from(1)
        }
    }
}

fn execute(args: &Args) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", args.config.display())))?;
    let mut cfg = config::parse_config(&text)?;
    if let Some(tol) = args.tol {
        if !(tol > 0.0) {
            return Err(CliError::value(format!(
                "--tol must be positive, got {tol}"
            )));
        }
        cfg.numerics.tol_closed = tol;
        cfg.numerics.tol_numeric = tol.max(cfg.numerics.tol_numeric);
    }
    if let Some(grid) = args.grid {
        cfg.numerics.grid = grid;
    }
    if let Some(branch) = &args.branch {
        if branch != "plus" && branch != "minus" {
            return Err(CliError::value(format!(
                "--branch must be plus or minus, got {branch}"
            )));
        }
        cfg.numerics.branch = branch.clone();
    }
    if let Some(rho) = args.rho {
        cfg.numerics.rho = Some(rho);
    }
    run::run(&cfg, &args.out)
}
