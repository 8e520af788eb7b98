//! `gensurp`: estimate generalized surprisal measures for a stimulus set,
//! study their sampling variability and evaluate them against measurements.

mod conformance;
mod correlate;
mod error;
mod estimates;
mod evaluate;
mod plot;
mod setup;
mod testbed;
mod variance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gensurp_core::config::BackendKind;

use crate::error::{Failure, Result};

#[derive(Parser)]
#[command(name = "gensurp", version, about = "Generalized surprisal estimation and evaluation")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Override the configured backend.
    #[arg(long, global = true, value_parser = parse_backend)]
    pub backend: Option<BackendKind>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

fn parse_backend(s: &str) -> std::result::Result<BackendKind, String> {
    s.parse()
}

#[derive(Subcommand)]
enum Command {
    /// Estimate every configured measure for every stimulus into the cache.
    Estimate,
    /// Bootstrap variability and runtime of the sampling estimators.
    Variance {
        /// Skip the runtime profile.
        #[arg(long)]
        no_runtime: bool,
    },
    /// Correlations among cached measures.
    Correlate,
    /// Cross-validated ΔR² of each measure for each response.
    Evaluate,
    /// Plot data and SVG figures from variance or evaluation reports.
    Plot {
        /// Report files written by `variance` or `evaluate`.
        files: Vec<PathBuf>,
        /// Output directory (default: next to each report).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus, stimuli, embeddings and config.
    Testbed {
        /// Directory to write into.
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        stimuli: usize,
        #[arg(long, default_value_t = 5000)]
        train_sentences: usize,
        #[arg(long, default_value_t = 40)]
        vocab: usize,
        /// Noise standard deviation of the synthetic reading times.
        #[arg(long, default_value_t = 15.0)]
        noise_sd: f64,
    },
    /// Check a bridge server against the protocol.
    Conformance {
        #[arg(long)]
        url: String,
        /// Directory of golden exchanges to replay.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    let global = &cli.global;
    if let Some(jobs) = global.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::config(format!("--jobs: {e}")))?;
    }
    match cli.command {
        Command::Estimate => estimates::run(global),
        Command::Variance { no_runtime } => variance::run(global, no_runtime),
        Command::Correlate => correlate::run(global),
        Command::Evaluate => evaluate::run(global),
        Command::Plot { files, out } => plot::run(&files, out.as_deref()),
        Command::Testbed {
            dir,
            stimuli,
            train_sentences,
            vocab,
            noise_sd,
        } => testbed::run(
            &dir,
            &testbed::Options {
                stimuli,
                train_sentences,
                vocab,
                seed: global.seed.unwrap_or(2024),
                noise_sd,
            },
        ),
        Command::Conformance { url, golden, timeout } => {
            conformance::run(&url, golden.as_deref(), timeout, global.seed.unwrap_or(0))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
