//! `lookback`: batch front end for the regime-switching lookback pricers.

mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Engine, Outcome};
use config::{defaults_table, RunConfig, MAX_SEED};
use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "lookback",
    version,
    about = "Price floating- and fixed-strike lookback options under two-state regime switching",
    after_help = defaults_table()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Override the Monte Carlo seed from the [mc] block.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=MAX_SEED))]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Price the configured contract with one engine.
    Price {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "ham")]
        engine: Engine,
    },
    /// Partial sums of the series, one row per order.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        max_order: usize,
    },
    /// Run all three engines and flag disagreement (exit 4).
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Series prices over a sweep of one parameter.
    Table {
        #[arg(long)]
        config: PathBuf,
        /// One of s, y, T, sigma1, sigma2, lambda12, lambda21.
        #[arg(long)]
        sweep: String,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        values: Vec<f64>,
    },
}

impl Command {
    fn config_path(&self) -> &PathBuf {
        match self {
            Command::Price { config, .. }
            | Command::Converge { config, .. }
            | Command::Validate { config }
            | Command::Table { config, .. } => config,
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli.command.config_path();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read",
        path: path.clone(),
        source,
    })?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(out) = &cli.output {
        cfg.output.path = Some(out.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<Option<CliError>> {
    let cfg = load(cli)?;
    let Outcome { text, failure } = match &cli.command {
        Command::Price { engine, .. } => commands::price(&cfg, *engine)?,
        Command::Converge { max_order, .. } => commands::converge(&cfg, *max_order)?,
        Command::Validate { .. } => commands::validate(&cfg)?,
        Command::Table { sweep, values, .. } => commands::table(&cfg, sweep, values)?,
    };
    match &cfg.output.path {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            action: "write",
            path: path.clone(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not worth a distinct exit code
            let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
        }
    }
    Ok(failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let failure = match run(&cli) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(failure)) => failure,
        Err(e) => e,
    };
    eprintln!("error: {failure}");
    ExitCode::from(failure.exit_code())
}
