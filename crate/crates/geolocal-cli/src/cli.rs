//! Flag parsing and dispatch. Flags serialize to the same keys as the config
//! structs so they can be layered over config files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::commands::{self, HidingConfig, RbwConfig, ReduceConfig, SimulateConfig, StatsConfig, TermTableConfig};
use crate::config::{document, env_seed, internal, resolve, usage, write_document, CliError, Outcome, Run};

#[derive(Debug, Parser)]
#[command(name = "geolocal", version, about = "Seeded experiments for worst-to-average-case reductions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact output probability and Taylor comparison for one instance
    Simulate(SimulateArgs),
    /// Randomized trials of the robust Berlekamp-Welch decoder
    RbwTest(RbwArgs),
    /// End-to-end worst-to-average-case reduction
    Reduce(ReduceArgs),
    /// Residuals of the Z-string hiding identity
    HidingCheck(HidingArgs),
    /// Sampler moments against closed forms
    Stats(StatsArgs),
    /// Pauli term table of a lattice
    TermTable(TermTableArgs),
}

/// Plumbing flags; none of these enter the resolved config.
#[derive(Debug, Args, Default)]
pub struct IoArgs {
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Worker threads for trial loops
    #[arg(long)]
    pub jobs: Option<usize>,
    /// JSON config file; flags take precedence over it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Lattice as `RxC`, with a trailing `p` for periodic boundaries
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Largest Taylor order in the comparison table
    #[arg(long)]
    m: Option<usize>,
    /// JSON coefficient file
    #[arg(long)]
    coeffs: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    io: IoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RbwArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of nodes
    #[arg(long)]
    n: Option<usize>,
    /// Corruption budget
    #[arg(long)]
    k: Option<usize>,
    /// Node separation
    #[arg(long)]
    delta: Option<f64>,
    /// Noise level on clean nodes
    #[arg(long)]
    epsilon: Option<f64>,
    /// Corrupt k + 1 nodes
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    violate_k: Option<bool>,
    #[command(flatten)]
    #[serde(skip)]
    io: IoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ReduceArgs {
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Interpolation degree
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Oracle noise level
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fraction of corrupted oracle answers
    #[arg(long)]
    corrupt: Option<f64>,
    #[arg(long)]
    radial_samples: Option<usize>,
    #[arg(long)]
    circumference_samples: Option<usize>,
    /// Sites with the extra field, as a bit string
    #[arg(long)]
    subset: Option<String>,
    /// Rescale the target to unit norm
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    no_extrapolation: Option<bool>,
    /// Compare against the exact simulator
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    truth: Option<bool>,
    /// CSV trace of every oracle call
    #[arg(long)]
    #[serde(skip)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    io: IoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct HidingArgs {
    #[arg(long)]
    lattice: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    triples: Option<usize>,
    /// Draws per ensemble in the distributional check
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    io: IoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Ambient dimension
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    io: IoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TermTableArgs {
    #[arg(long)]
    lattice: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    io: IoArgs,
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(usage("--jobs must be positive")),
        Some(j) => Ok(rayon::ThreadPoolBuilder::new().num_threads(j).build().map_err(internal)?.install(f)),
    }
}

fn dispatch<C, F>(name: &str, flags: &impl Serialize, io: &IoArgs, run: F) -> Result<Outcome, CliError>
where
    C: Serialize + DeserializeOwned + Default + Sync,
    F: FnOnce(&C) -> Result<Run, CliError> + Send,
{
    let flags = serde_json::to_value(flags).map_err(internal)?;
    let resolved = resolve::<C>(flags, io.config.as_deref(), env_seed()?)?;
    let run = with_jobs(io.jobs, || run(&resolved.config))??;
    write_document(&document(name, &resolved, &run), io.output.as_deref())?;
    Ok(run.outcome)
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Simulate(a) => dispatch::<SimulateConfig, _>("simulate", &a, &a.io, commands::simulate),
        Command::RbwTest(a) => dispatch::<RbwConfig, _>("rbw-test", &a, &a.io, commands::rbw_test),
        Command::Reduce(a) => {
            let trace: Option<&Path> = a.trace.as_deref();
            dispatch::<ReduceConfig, _>("reduce", &a, &a.io, |c| commands::reduce(c, trace))
        }
        Command::HidingCheck(a) => dispatch::<HidingConfig, _>("hiding-check", &a, &a.io, commands::hiding_check),
        Command::Stats(a) => dispatch::<StatsConfig, _>("stats", &a, &a.io, commands::stats),
        Command::TermTable(a) => dispatch::<TermTableConfig, _>("term-table", &a, &a.io, commands::term_table),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("geolocal: {e}");
            e.exit_code()
        }
    }
}
