//! `parsemunge` command line.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for data errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use parsemunge::{Error, Result};

use commands::{FitArgs, ImportanceArgs};

#[derive(Parser)]
#[command(name = "parsemunge", version, about = "Fit and apply tabular encoders with string parsing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit encoders on a train CSV and write the encoded tables and artifact.
    Fit {
        train: PathBuf,
        /// Optional test CSV encoded with the fresh artifact.
        test: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Cardinality threshold for automatic root selection.
        #[arg(long)]
        threshold: Option<usize>,
        /// Label column (overrides labels_column in the config).
        #[arg(long)]
        labels: Option<String>,
    },
    /// Encode a CSV with a saved artifact.
    Apply {
        artifact: PathBuf,
        test: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Print train-vs-new distribution drift.
        #[arg(long)]
        drift: bool,
    },
    /// Recover source columns from an encoded CSV.
    Invert {
        artifact: PathBuf,
        encoded: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Permutation feature importance with the built-in tree ensemble.
    Importance {
        train: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long)]
        labels: Option<String>,
    },
    /// Print the derivation trees stored in an artifact.
    Inspect { artifact: PathBuf },
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("PARSEMUNGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("PARSEMUNGE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    init_threads()?;
    match cli.command {
        Command::Fit {
            train,
            test,
            config,
            out_dir,
            seed,
            threshold,
            labels,
        } => commands::cmd_fit(&FitArgs {
            train,
            test,
            config,
            out_dir,
            seed,
            threshold,
            labels,
        }),
        Command::Apply {
            artifact,
            test,
            out_dir,
            drift,
        } => commands::cmd_apply(&artifact, &test, &out_dir, drift),
        Command::Invert {
            artifact,
            encoded,
            out_dir,
        } => commands::cmd_invert(&artifact, &encoded, &out_dir),
        Command::Importance {
            train,
            config,
            out_dir,
            seed,
            threshold,
            labels,
        } => commands::cmd_importance(&ImportanceArgs {
            train,
            config,
            out_dir,
            seed,
            threshold,
            labels,
        }),
        Command::Inspect { artifact } => commands::cmd_inspect(&artifact),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
