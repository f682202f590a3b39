//! Command-line front end for `ident-core`.
//!
//! Exit codes: 0 on success, 1 when a verification suite reports failures,
//! 2 for usage, configuration and input errors. `IDENT_TOLERANCE` overrides
//! the comparison tolerance of the verification suites.

pub mod commands;
pub mod config;
pub mod sweep;
pub mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ident_core::{Measure, PermanentMethod};

pub const TOLERANCE_ENV: &str = "IDENT_TOLERANCE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config{}{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default(), field.as_ref().map(|f| format!(" at {f}")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] ident_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum MeasureArg {
    #[default]
    Entropy,
    Concurrence,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Entropy => Measure::Entropy,
            MeasureArg::Concurrence => Measure::Concurrence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum MethodArg {
    #[default]
    Ryser,
    Naive,
}

impl From<MethodArg> for PermanentMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Ryser => PermanentMethod::Ryser,
            MethodArg::Naive => PermanentMethod::Naive,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ident", version, about = "Entanglement of identical particles seen by two detectors")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Ensemble config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, `-` for stdout.
    #[arg(long, global = true, default_value = "-")]
    pub output: String,
    /// Output format; sweeps default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum, default_value_t)]
    pub measure: MeasureArg,
    /// Permanent kernel.
    #[arg(long, global = true, value_enum, default_value_t)]
    pub method: MethodArg,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition amplitude between two ensembles of the same size.
    Amplitude {
        /// Config of the bra state.
        #[arg(long)]
        bra: PathBuf,
    },
    /// Detector sectors, leak and average entanglement.
    Project,
    /// Grid evaluation of `project` over config parameters.
    Sweep {
        /// Sweep description (JSON).
        #[arg(long)]
        sweep: Option<PathBuf>,
        /// Inline axis, `particles[i].field=start:stop:steps` or `=v1,v2,...`.
        #[arg(long = "axis")]
        axes: Vec<String>,
    },
    /// Schmidt coefficients of each sector, or the label/mode split comparison.
    Schmidt {
        /// Particle split `N_L,N_R` for the label/mode comparison.
        #[arg(long)]
        split: Option<String>,
    },
    /// Run a verification suite: theorem1, n2-closed-form, n3-closed-form, schmidt, oracle.
    Verify { suite: String },
}

/// Reads the tolerance override, if set.
pub fn tolerance_override() -> Result<Option<f64>, CliError> {
    match std::env::var(TOLERANCE_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Usage(format!("{TOLERANCE_ENV}: {e}"))),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(t) if t.is_finite() && t > 0.0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("{TOLERANCE_ENV} must be a positive number, got `{s}`"))),
        },
    }
}

pub fn open_output(target: &str) -> Result<Box<dyn Write>, CliError> {
    if target == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(target).map_err(|e| CliError::Usage(format!("cannot create {target}: {e}")))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

/// Runs the parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match commands::dispatch(&cli) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFY_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
