//! The `zics` command-line tool: network validation, the closed-to-open
//! transform, moment-equation export, closure solves and reference oracles.

pub mod args;
mod commands;
pub mod output;
pub mod plot;
pub mod space;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

pub use args::{Cli, Command};
pub use commands::pair_totals;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("{0}")]
    Usage(String),
    /// Unreadable or malformed input files.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    /// Invalid network, failed solve, oracle cap and similar.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Input(_) | Self::Io(_) => 1,
            Self::Domain(_) => 2,
        }
    }
}

/// Runs the tool on `args` (including the program name), writing reports to
/// stdout, and returns the process exit code.
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
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(cli.command))
}
