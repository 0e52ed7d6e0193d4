//! Command-line front end: instance generation, dimension reports, agent
//! runs and parameter sweeps. Every command is a pure function of its flags,
//! config file and seed list, so reruns write byte-identical files.

pub mod cli;
pub mod dims;
pub mod gen;
pub mod output;
pub mod run;
pub mod settings;
pub mod sweep;

use std::fmt;

use clap::Parser;

pub use cli::{Cli, Command};

/// Usage errors exit with 2, runtime aborts with 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<beldim::Error> for CliError {
    fn from(e: beldim::Error) -> Self {
        match e {
            beldim::Error::InvalidArgument(_) | beldim::Error::EnumerationCap { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Executes a parsed command, writing human-readable progress to `log`.
pub fn execute(cli: &Cli, log: &mut dyn std::io::Write) -> CliResult<()> {
    match &cli.command {
        Command::Gen(args) => gen::cmd_gen(args, log),
        Command::Dims(args) => dims::cmd_dims(args, log),
        Command::Run(args) => run::cmd_run(args, log),
        Command::Sweep(args) => sweep::cmd_sweep(args, log),
    }
}

/// Parses `argv` (including the program name) and executes it; returns the
/// process exit code. Parse errors print clap's message and return 2.
pub fn main_with_args<I, T>(argv: I, log: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = output::configure_threads() {
        eprintln!("{e}");
        return e.exit_code();
    }
    match execute(&cli, log) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
