//! `gbmem` command-line experiments.
//!
//! Every command writes its artifacts under `<out>/<command>/<name>/`
//! together with a `manifest.json`. Exit status is 0 on success, 1 for bad
//! input, 2 when an internal consistency check fails.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "gbmem",
    version,
    about = "Generalized-bicycle memory experiments on atom arrays"
)]
pub struct Cli {
    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Run directory name; defaults to the current Unix time.
    #[arg(long, global = true)]
    pub name: Option<String>,
    /// Seed recorded in every artifact and used by randomized steps.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Run single-threaded.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a code and print n, k, check weight, a distance bound and steps/op.
    Code(CodeArgs),
    /// Write the atom layout of a code as CSV.
    Layout(LayoutArgs),
    /// Build and verify the movement schedule of one round.
    Schedule(ScheduleArgs),
    /// Round time, rounds per cycle and cycle time for several codes.
    CostTable(CostTableArgs),
    /// Circuit-level memory experiment; appends one CSV row.
    Simulate(SimulateArgs),
    /// Decoder throughput and convergence statistics.
    DecodeBench(DecodeBenchArgs),
    /// Compile a Clifford+T program onto the hierarchy (or the baseline).
    Compile(CompileArgs),
    /// Memory experiments over a list of physical error rates.
    Sweep(SweepArgs),
}

/// A spec file path, or a catalog label such as `[72,12,6]`.
#[derive(Args, Debug, Clone)]
pub struct CodeInput {
    pub code: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Variant {
    Standard,
    CollisionFree,
}

#[derive(Args, Debug)]
pub struct CodeArgs {
    #[command(flatten)]
    pub input: CodeInput,
    /// Random information sets tried by the distance search.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
}

#[derive(Args, Debug)]
pub struct LayoutArgs {
    #[command(flatten)]
    pub input: CodeInput,
    #[arg(long, value_enum, default_value = "standard")]
    pub variant: Variant,
}

#[derive(Args, Debug, Clone)]
pub struct MovementArgs {
    #[arg(long, value_enum, default_value = "standard")]
    pub variant: Variant,
    /// Use the sorted-term heuristic instead of the optimal phase order.
    #[arg(long)]
    pub heuristic: bool,
    /// Bill the homeward move of each half.
    #[arg(long)]
    pub bill_return: bool,
    /// Additive per-round constant, in microseconds.
    #[arg(long, default_value_t = 0.0)]
    pub constant_us: f64,
    /// AOD acceleration, in µm/µs².
    #[arg(long, default_value_t = 0.02)]
    pub accel: f64,
}

#[derive(Args, Debug)]
pub struct ScheduleArgs {
    #[command(flatten)]
    pub input: CodeInput,
    #[command(flatten)]
    pub movement: MovementArgs,
}

#[derive(Args, Debug)]
pub struct CostTableArgs {
    /// Spec files or catalog labels; the six simulated codes when empty.
    pub codes: Vec<String>,
    #[command(flatten)]
    pub movement: MovementArgs,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    /// Physical error rate.
    #[arg(long, default_value_t = 1e-3)]
    pub p: f64,
    /// Coherence time, in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub t_coherence: f64,
    /// Syndrome rounds; the code distance when omitted.
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Memory basis.
    #[arg(long, value_enum, default_value = "z")]
    pub basis: BasisArg,
    /// BP iteration cap.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// OSD combination-sweep order.
    #[arg(long, default_value_t = 10)]
    pub osd_order: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BasisArg {
    X,
    Z,
}

#[derive(Args, Debug, Clone)]
pub struct StopArgs {
    #[arg(long, default_value_t = 100)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_shots: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: CodeInput,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    /// Also append the row to this CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecodeBenchArgs {
    #[command(flatten)]
    pub input: CodeInput,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 2048)]
    pub shots: usize,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Program file, or `ghz:N`, `bv:N`, `adder:N`, `ising:N[:steps[:len]]`.
    pub program: String,
    /// Architecture file; built-in hierarchy when omitted.
    #[arg(long)]
    pub arch: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub blocks: usize,
    #[arg(long, default_value_t = 4)]
    pub surface: usize,
    #[arg(long, default_value_t = 11)]
    pub d: usize,
    /// Also compile for the surface-code-only baseline.
    #[arg(long)]
    pub baseline: bool,
    /// `axis=range`, e.g. `n_surface=4..12` or `ldst_multiplier=0.5,1,2`.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: CodeInput,
    /// Comma-separated physical error rates.
    #[arg(long, default_value = "3e-3,1e-3,3e-4")]
    pub ps: String,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    pub stop: StopArgs,
}

/// Failure with its exit status.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
