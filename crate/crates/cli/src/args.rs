use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "zics",
    version,
    about = "Maximum-entropy moment closure for reaction networks"
)]
pub struct Cli {
    /// Worker threads for parallel reductions (default: all cores).
    #[arg(long, global = true, env = "ZICS_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the reactions and check grouped propensities over a state space.
    Validate(ValidateArgs),
    /// Eliminate conserved species and write the open network.
    Transform(TransformArgs),
    /// Export the factorial moment equations of a given order.
    Moments(MomentsArgs),
    /// Solve the closure for the stationary distribution.
    Solve(SolveArgs),
    /// Compute a reference distribution from the truncated CME or the SSA.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// `NAME=min:max,...` or positional `min:max,...`.
    #[arg(long)]
    pub space: String,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Totals of the conservation laws as `NAME=VALUE`.
    #[arg(long, num_args = 0.., value_name = "NAME=VALUE")]
    pub totals: Vec<String>,
    /// Species eliminated by the laws, in the order of `--totals`.
    #[arg(long, num_args = 0..)]
    pub dependent: Vec<String>,
    /// Output network file; `.tsv` selects TSV, anything else JSON. Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub order: u32,
    /// `text`, `csv` or `json`.
    #[arg(long, default_value = "text")]
    pub format: String,
    /// Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub space: String,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_order: u32,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub initial_order: u32,
    /// Escalate to `max_order` without the L1 stopping test.
    #[arg(long)]
    pub no_adaptive: bool,
    /// L1 threshold between successive orders.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Relative residual tolerance of the Newton iteration.
    #[arg(long, default_value_t = 1e-9)]
    pub residual_tol: f64,
    /// `lambdas.json` from an earlier run.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write SVG plots of the marginals.
    #[arg(long)]
    pub plot: bool,
    /// Marginal CSV (`species,count,probability`) drawn as points on the plots.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub space: String,
    /// Solve the truncated master equation.
    #[arg(long, conflicts_with = "ssa", required_unless_present = "ssa")]
    pub cme: bool,
    /// Run the stochastic simulation algorithm.
    #[arg(long)]
    pub ssa: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulated time per trajectory.
    #[arg(long, default_value_t = 1e4)]
    pub time: f64,
    #[arg(long, default_value_t = 4)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 100.0)]
    pub burn_in: f64,
    #[arg(long, default_value_t = 10.0)]
    pub sample_interval: f64,
    /// Initial SSA state as `NAME=count,...` or positional counts; defaults to the lower bounds.
    #[arg(long)]
    pub initial: Option<String>,
    /// Largest state space the CME solve accepts.
    #[arg(long, default_value_t = zics_core::oracle::DEFAULT_STATE_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}
