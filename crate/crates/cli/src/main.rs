//! `btpgame`: estimate metrics, play games and check theorems from the
//! command line.
//!
//! Exit codes: 0 on success, 1 when a theorem check fails (the report is
//! still written), 2 on configuration or usage errors.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use btpgame::verify::Theorem;
use btpgame::{BtpError, LambdaSet};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use commands::{cmd_game, cmd_metrics, cmd_verify, default_adversary, GameKind, Outcome};
use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] BtpError),
    #[error("cannot write report: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "btpgame", version, about = "Game-based evaluation of biometric template protection")]
struct Cli {
    /// JSON experiment config; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Experiment seed (the population keeps its own seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recognition and protection metrics with their exact values.
    Metrics {
        #[arg(long)]
        tau: Option<u32>,
    },
    /// Play one game with a named adversary.
    Game {
        #[arg(value_enum)]
        game: GameKind,
        #[arg(long)]
        adversary: Option<String>,
        #[arg(long)]
        lambda: Option<LambdaSet>,
        #[arg(long)]
        tau: Option<u32>,
    },
    /// Run theorem checks.
    Verify {
        #[arg(long, default_value = "all")]
        theorem: Theorem,
        #[arg(long)]
        tau: Option<u32>,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    match &cli.command {
        Command::Metrics { tau } | Command::Verify { tau, .. } => cfg.tau = tau.unwrap_or(cfg.tau),
        Command::Game { lambda, tau, .. } => {
            cfg.tau = tau.unwrap_or(cfg.tau);
            cfg.lambda = lambda.unwrap_or(cfg.lambda);
        }
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    let cfg = load_config(cli)?;
    if cli.format == Format::Csv && matches!(cli.command, Command::Verify { .. }) {
        return Err(CliError::Usage("csv output covers metric and game reports; use --format json for verify".into()));
    }
    let start = Instant::now();
    let mut outcome = match &cli.command {
        Command::Metrics { .. } => cmd_metrics(&cfg)?,
        Command::Game { game, adversary, .. } => {
            let name = adversary.clone().unwrap_or_else(|| default_adversary(&cfg, *game));
            cmd_game(&cfg, *game, &name)?
        }
        Command::Verify { theorem, .. } => cmd_verify(&cfg, *theorem)?,
    };
    outcome.report.timings.wall_clock_seconds = start.elapsed().as_secs_f64();
    write_report(cli, &outcome)?;
    Ok(outcome)
}

fn write_report(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let report = &outcome.report;
    match &cli.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
            match cli.format {
                Format::Json => report.write_json(BufWriter::new(file)),
                Format::Csv => report.write_csv(BufWriter::new(file)),
            }
        }
        None => match cli.format {
            Format::Json => report.write_json(io::stdout().lock()),
            Format::Csv => report.write_csv(io::stdout().lock()),
        },
    }
}

/// Prints the outcome summary and picks the exit status.
fn finish(result: &Result<Outcome, CliError>) -> u8 {
    match result {
        Ok(outcome) => {
            for note in &outcome.report.notes {
                eprintln!("note: {note}");
            }
            for v in outcome.report.theorems.iter().filter(|v| v.is_failure()) {
                eprintln!("verification failed: {} ({})", v.id, v.claim);
            }
            u8::from(outcome.failed)
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(finish(&run(&cli)))
}
