//! `rerm`: run sampling, training, evaluation and graphex simulations from
//! one declarative config file.

mod commands;
mod config;
mod data;
mod error;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RawConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "rerm", version, about = "Relational empirical risk minimization on graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config; nested tables and dotted keys are equivalent.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Override one config key, e.g. `--set train.steps=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse an edge list and write the binary cache (`graph.bin`, `graph.ids`).
    Ingest,
    /// Dump sampled subgraphs to `samples.jsonl`.
    Sample,
    /// Fit embeddings and global parameters; writes `model.ckpt`, `trace.jsonl`, `embeddings.tsv`.
    Train,
    /// Node-classification protocol; writes `results.csv`.
    Eval,
    /// Graphex-process experiments; writes `simulate.jsonl`.
    Simulate,
    /// Compare exact and Monte-Carlo risks and gradients; writes `riskcheck.json`.
    Riskcheck,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut raw = match &cli.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    let bad = raw.apply_overrides(&cli.overrides);
    let explicit: BTreeSet<String> = raw.entries.keys().cloned().collect();
    let cfg = match config::resolve(&raw) {
        Ok(cfg) if bad.is_empty() => cfg,
        Ok(_) => return Err(CliError::invalid(bad)),
        Err(mut e) => {
            e.violations.splice(0..0, bad);
            return Err(CliError::invalid(e.violations));
        }
    };
    if !matches!(cli.command, Command::Simulate) {
        data::check_inputs(&cfg)?;
    }

    let outcome = match cli.command {
        Command::Ingest => commands::ingest(&cfg)?,
        Command::Sample => commands::sample(&cfg)?,
        Command::Train => commands::train_cmd(&cfg)?,
        Command::Eval => commands::eval(&cfg)?,
        Command::Simulate => commands::simulate(&cfg, &explicit)?,
        Command::Riskcheck => commands::riskcheck(&cfg)?,
    };
    let written = outcome.artifacts.write(&cfg.output_dir)?;
    let mut summary = outcome.summary;
    summary["outputs"] = written.iter().map(|p| p.display().to_string()).collect();
    println!("{summary}");
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
