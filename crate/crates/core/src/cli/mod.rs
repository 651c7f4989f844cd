//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 solver failure,
//! 4 unstable operating point under `--strict`.

mod commands;
pub mod config;
pub mod report;
mod sweep;
pub mod units;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{analyze, Analysis};
pub use sweep::{parse_axis, Axis};

/// JSON Schema documents for every JSON file the CLI writes.
pub mod schemas {
    pub const REPORT: &str = include_str!("../../schemas/report.schema.json");
    pub const PROFILE: &str = include_str!("../../schemas/profile.schema.json");
    pub const TRAJECTORY: &str = include_str!("../../schemas/trajectory.schema.json");
    pub const SWEEP: &str = include_str!("../../schemas/sweep.schema.json");
    pub const FIGURES: &str = include_str!("../../schemas/figures.schema.json");
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const UNSTABLE: i32 = 4;

    pub fn io(message: impl Into<String>) -> Self {
        CliError { code: Self::IO, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError { code: Self::VALIDATION, message: message.into() }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        CliError { code: Self::SOLVER, message: message.into() }
    }

    pub fn unstable(message: impl Into<String>) -> Self {
        CliError { code: Self::UNSTABLE, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        use crate::Error as E;
        let text = e.to_string();
        match e {
            E::InvalidParameter { .. }
            | E::QuadrupoleOnly { .. }
            | E::MultipoleOnly { .. }
            | E::UnstablePoint { .. }
            | E::Deconfined { .. } => CliError::validation(text),
            E::Escaped { .. } | E::TrajectoryStepUnderflow { .. } => CliError::solver(text),
            E::OutOfBracket { .. } => {
                CliError::solver(format!("{text}; change the linear density or the temperature"))
            }
            E::ProfileStepUnderflow { .. } | E::Divergence { .. } | E::IncompleteProfile => {
                CliError::solver(format!("{text}; try a higher temperature or a larger --edge-threshold"))
            }
            E::NonMonotone { .. } | E::IllConditioned { .. } | E::MatchNotConverged { .. } | E::TooShort { .. } => {
                CliError::solver(text)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "multipole-trap", version, about = "Linear RF multipole trap modelling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Trap configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Adiabaticity limit for the fit verdict.
    #[arg(long = "eta-lim", global = true, value_name = "FLOAT", default_value_t = crate::model::DEFAULT_ETA_LIMIT)]
    pub eta_lim: f64,
    /// Relative density n/n0 that marks the cloud edge.
    #[arg(long = "edge-threshold", global = true, value_name = "FLOAT", default_value_t = crate::fluid::DEFAULT_EDGE_THRESHOLD)]
    pub edge_threshold: f64,
    /// Fail with exit code 4 on an unstable operating point.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CloudArgs {
    /// Overrides cloud.temperature, e.g. "5 K".
    #[arg(long, value_name = "QUANTITY")]
    pub temperature: Option<String>,
    /// Overrides cloud.linear_density, e.g. "1e5 /mm".
    #[arg(long = "linear-density", value_name = "QUANTITY")]
    pub linear_density: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derived trap quantities.
    Params(CloudArgs),
    /// Cold-fluid density profile.
    Profile(CloudArgs),
    /// Single-ion trajectory and its spectrum.
    Trajectory,
    /// Cold-cloud radius against the adiabatic region.
    Scale(CloudArgs),
    /// Reports over a range of one config field.
    Sweep {
        /// `table.key=V1,V2,...` or `table.key=START..STOP:N[:log]`.
        #[arg(long, value_name = "SPEC")]
        axis: String,
        #[command(flatten)]
        cloud: CloudArgs,
    },
    /// Reference density profiles for quadrupole, octopole and 12-pole traps.
    Figures,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Results go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::execute(&cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.stdout);
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
