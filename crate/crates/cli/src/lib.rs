//! Command-line front-end. `run` parses arguments, executes one subcommand
//! and emits its report. Exit codes: 0 success, 1 I/O failure, 2 invalid
//! configuration, 3 numerical failure.

pub mod args;
pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use zrp_core::ZrpError;

pub use report::{emit_report, Report, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<ZrpError> for CliError {
    fn from(e: ZrpError) -> Self {
        use ZrpError::*;
        match e {
            NonzeroAtZero { .. }
            | NonpositiveRate { .. }
            | NonpositiveTail { .. }
            | RateSpec(_)
            | StateSpaceTooLarge { .. }
            | PairSpaceTooLarge { .. }
            | InvalidInitial(_)
            | InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| std::env::var("ZRP_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n {
        // a pool built by an earlier call in the same process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Run the CLI on `argv` (including the program name) and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    init_threads(cli.threads);
    match commands::execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
