//! `kg` — train, score, ensemble, and predict over integer-encoded
//! knowledge graphs.
//!
//! Every command takes `--config PATH` plus trailing `key=value` overrides.
//! Exit status: 0 on success, 1 on usage errors, 2 on data errors.

mod commands;
mod config;
mod sources;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Split;
use config::Config;
use kg_core::KgError;

#[derive(Parser)]
#[command(name = "kg", version, about = "Knowledge-graph link prediction pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one embedding model (transe, rotate, quate, note, deepwalk).
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Which model to train.
        #[arg(long)]
        model: String,
        /// Add each validation query's true triple to the training input.
        #[arg(long)]
        merge_validation: bool,
        /// key=value config overrides.
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Score queries with one or more sources, writing a matrix file each.
    Score {
        #[arg(long)]
        config: PathBuf,
        /// Source names (repeatable): models, `<model>_smooth`, feature
        /// kinds, or the groups all_models / all_features.
        #[arg(long = "source", required = true)]
        sources: Vec<String>,
        #[arg(long, default_value = "valid")]
        split: String,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Compute all thirteen feature matrices plus the candidate-frequency map.
    Features {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "valid")]
        split: String,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Generate and persist the random-walk corpus.
    Walks {
        #[arg(long)]
        config: PathBuf,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Grid-search ensemble weights on the validation split.
    Ensemble {
        #[arg(long)]
        config: PathBuf,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Report per-source and ensemble MRR on a labeled split.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "valid")]
        split: String,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Emit top-K candidate positions per query under the frozen weights.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

enum CliError {
    Usage(String),
    Data(KgError),
}

impl From<KgError> for CliError {
    fn from(e: KgError) -> Self {
        CliError::Data(e)
    }
}

fn load_config(path: &PathBuf, overrides: &[String]) -> Result<Config, CliError> {
    let mut cfg = Config::load(path)?;
    cfg.apply_overrides(overrides)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let threads = cfg.threads()?;
    // One pool per process; later calls are no-ops and that is fine.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            config,
            model,
            merge_validation,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            commands::cmd_train(&cfg, &model, merge_validation)?;
        }
        Command::Score {
            config,
            sources,
            split,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let split = Split::parse(&split).map_err(CliError::Usage)?;
            let specs = sources::resolve_sources(&sources).map_err(CliError::Usage)?;
            commands::cmd_score(&cfg, &specs, split)?;
        }
        Command::Features {
            config,
            split,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let split = Split::parse(&split).map_err(CliError::Usage)?;
            commands::cmd_features(&cfg, split)?;
        }
        Command::Walks { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            commands::cmd_walks(&cfg)?;
        }
        Command::Ensemble { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            commands::cmd_ensemble(&cfg)?;
        }
        Command::Eval {
            config,
            split,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let split = Split::parse(&split).map_err(CliError::Usage)?;
            commands::cmd_eval(&cfg, split)?;
        }
        Command::Predict {
            config,
            split,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let split = Split::parse(&split).map_err(CliError::Usage)?;
            commands::cmd_predict(&cfg, split)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
