//! The `gal` command-line tool.
//!
//! Exit codes: 0 success, 1 contract or parse error, 2 numeric abort,
//! 3 bound counterexample.

mod bounds;
mod manifest;
mod run;
mod stats;
mod sweep;

pub use bounds::{
    check_bounds, BoundTally, BoundsSummary, Counterexample, BOUNDS_FILE, COUNTEREXAMPLE_FILE,
};
pub use manifest::{FileDigest, RunManifest, MANIFEST_FILE};
pub use run::{CHECKPOINT_FILE, CONFIG_FILE, EMBEDDINGS_FILE, HISTORY_FILE, REPORT_FILE};
pub use stats::{hop_stats, nhop_csv, HopStats, NHOP_FILE};
pub use sweep::{sweep_csv, SweepPoint, FAILURES_FILE, SWEEP_FILE};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::eval::EvalError;
use crate::graph::GraphError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Counterexample(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Contract(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Counterexample(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Contract(format!("{}: {e}", path.display()))
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Numeric(_) | TrainError::Aborted { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Contract(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Numeric(_) => CliError::Numeric(e.to_string()),
            EvalError::Train(t) => t.into(),
            other => CliError::Contract(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gal",
    version,
    about = "Adversarial attribute obfuscation for GNN encoders"
)]
pub struct Cli {
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a stochastic block model graph.
    Generate,
    /// Train an encoder with the adversarial objective.
    Train(TrainArgs),
    /// Attack a trained encoder's embeddings with fresh probes.
    Probe(ProbeArgs),
    /// Train and probe over a grid of lambdas and seeds.
    Sweep(SweepArgs),
    /// Acceptance and exact-distance statistics of the n-hop sampler.
    NhopStats(NhopArgs),
    /// Check the trade-off and leakage bounds on random instances.
    VerifyBounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory with nodes.csv and edges.csv.
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    /// Output directory of a train run.
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Fixed graph directory.
    #[arg(long, conflicts_with = "sbm", required_unless_present = "sbm")]
    pub graph: Option<PathBuf>,
    /// Generator config; each seed samples its own graph.
    #[arg(long)]
    pub sbm: Option<PathBuf>,
    /// Probe config; probes attack with the training pairing by default.
    #[arg(long)]
    pub probe_config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    /// Defaults to the global seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Args)]
pub struct NhopArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub hops: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
}

pub(crate) fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    match &cli.command {
        Command::Generate => run::generate(cli),
        Command::Train(a) => run::train(cli, a),
        Command::Probe(a) => run::probe(cli, a),
        Command::Sweep(a) => sweep::sweep(cli, a),
        Command::NhopStats(a) => stats::nhop_stats(cli, a),
        Command::VerifyBounds(a) => bounds::verify_bounds(cli, a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
