//! Command-line front end: `estimate`, `test`, `forecast` and `simulate`.
//!
//! Exit codes: 0 success, 1 numerical failure (including non-converged
//! fits), 2 usage or configuration error.

mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    DataConfig, DateField, EstimationConfig, McsConfig, PlotsConfig, RollingConfig, RunConfig, SimulateConfig,
    TestsConfig,
};
pub use report::sig6;

#[derive(Debug, Parser)]
#[command(name = "condcorr", version, about = "Conditional correlation models with an exogenous driver and regime calendar")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every random component (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Fit the first step and every requested correlation model.
    Estimate,
    /// Information criteria, LR, LM, Wald and Ljung-Box tests.
    Test,
    /// Rolling out-of-sample forecasts, losses and model confidence sets.
    Forecast,
    /// Simulate a data set from the configured process.
    Simulate,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("condcorr: {e}");
            e.exit_code()
        }
    }
}

/// Loads the config, applies flag overrides and dispatches. Returns the exit
/// code of a completed command.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(CliError::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    cfg.validate().map_err(CliError::Usage)?;
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", cfg.out.display())))?;
    match cli.command {
        Command::Estimate => commands::estimate(&cfg),
        Command::Test => commands::test(&cfg),
        Command::Forecast => commands::forecast(&cfg),
        Command::Simulate => commands::simulate(&cfg),
    }
}
