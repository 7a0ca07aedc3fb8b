//! Command-line front end for alphaforge.
//!
//! [`run`] parses arguments, executes one subcommand and returns the exit
//! code: 0 on success, 1 for usage errors (bad flags, bad configuration),
//! 2 for data or geometry errors (unreadable files, degenerate input,
//! empty reconstructions). Diagnostics go to standard error; primary output
//! goes to standard output unless `--out` names a file.

pub mod config;

mod commands;
mod io;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::commands::{
    AblateArgs, EvaluateArgs, ReconstructArgs, SampleArgs, SynthArgs, TrainPolicyArgs, TriangulateArgs,
};
use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

impl From<alphaforge_core::Error> for Failure {
    fn from(e: alphaforge_core::Error) -> Self {
        use alphaforge_core::Error as E;
        match e {
            E::Config(_) | E::UnknownProtocol(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

/// Point-cloud to mesh reconstruction with learned alpha-shape thresholds.
#[derive(Debug, Parser)]
#[command(name = "alphaforge", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Base seed; every random stream derives from it by a fixed offset
    /// [default: the config's seed, else 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages; 0 uses every core [default: 0]
    #[arg(long, global = true, env = "ALPHAFORGE_JOBS")]
    jobs: Option<usize>,
    /// JSON run configuration; flags override its values (defaults are
    /// listed under --help)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reconstruct a mesh from a point cloud at a fixed or policy-chosen threshold
    Triangulate(TriangulateArgs),
    /// Triangulate, build the smoothed baseline and refine it against the cloud
    Reconstruct(ReconstructArgs),
    /// Train a threshold policy on a directory of clouds and reference meshes
    TrainPolicy(TrainPolicyArgs),
    /// Score a predicted mesh against a reference under an evaluation protocol
    Evaluate(EvaluateArgs),
    /// Draw area-uniform surface samples with normals from a mesh
    Sample(SampleArgs),
    /// Generate a synthetic cloud and its reference mesh
    Synth(SynthArgs),
    /// Compare fixed thresholds with a policy, per shape class
    Ablate(AblateArgs),
}

fn config_help() -> String {
    let defaults = serde_json::to_string_pretty(&RunConfig::default()).expect("config serializes");
    format!(
        "Exit codes: 0 success, 1 usage error, 2 data or geometry error.\n\n\
         Configuration file (--config) keys and their defaults:\n{defaults}"
    )
}

/// Runs the command line `argv` (program name first) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().after_long_help(config_help()).try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs.unwrap_or(0))
        .build()
        .map_err(|e| {
            Failure::Usage(format!(
                "cannot start {} worker threads: {e}",
                cli.global.jobs.unwrap_or(0)
            ))
        })?;
    pool.install(|| match cli.command {
        Command::Triangulate(a) => commands::triangulate(a, &cfg),
        Command::Reconstruct(a) => commands::reconstruct(a, &cfg),
        Command::TrainPolicy(a) => commands::train_policy(a, &cfg),
        Command::Evaluate(a) => commands::evaluate(a, &cfg),
        Command::Sample(a) => commands::sample(a, &cfg),
        Command::Synth(a) => commands::synth(a, &cfg),
        Command::Ablate(a) => commands::ablate(a, &cfg),
    })
}
