//! Command-line harness: configuration, domain ingestion and report output
//! for the `magrobin` binary.

pub mod commands;
pub mod config;
pub mod grid;
pub mod output;
pub mod schema;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{Format, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_HYPOTHESES: i32 = 4;
pub const EXIT_FAILED: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) | CliError::Io(_) | CliError::Internal(_) => EXIT_NUMERIC,
        }
    }
}

impl From<magrobin::Error> for CliError {
    fn from(e: magrobin::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "magrobin", version, about = "Ground states of the magnetic Robin Laplacian on planar domains")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Disk ground state, admissibility and critical parameter
    Disk(DiskArgs),
    /// Compare a domain with the disk of equal perimeter
    Verify(VerifyArgs),
    /// CSV of disk (or domain transplant) quantities over a (beta, b) grid
    Sweep(SweepArgs),
    /// Level-curve moments against the disk of equal perimeter
    Subordinacy(DomainArg),
    /// Strong-coupling expansions and the dilation identity
    Asymptotics(AsymptoticsArgs),
    /// Finite-element ground state of a star domain or a mesh file
    Fem(FemArgs),
}

#[derive(Debug, Args)]
pub struct DiskArgs {
    #[arg(long = "R", default_value_t = 1.0, allow_hyphen_values = true)]
    pub radius: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Also locate the critical parameter; without --beta the state is
    /// evaluated there
    #[arg(long)]
    pub beta_critical: bool,
}

#[derive(Debug, Args)]
pub struct DomainArg {
    /// Domain JSON file
    #[arg(long)]
    pub domain: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Domain JSON file; the disk of radius --R when absent
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long = "R", default_value_t = 1.0, allow_hyphen_values = true)]
    pub radius: f64,
    /// `start:end:count`
    #[arg(long, allow_hyphen_values = true)]
    pub beta: String,
    /// `start:end:count`
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    /// Add a column telling whether (beta, b) lies in the sufficient regime
    #[arg(long)]
    pub corollary_overlay: bool,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    /// Star domain file; the disk expansion is checked when absent
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long = "R", default_value_t = 1.0, allow_hyphen_values = true)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0)]
    pub b: f64,
    /// Comma-separated decreasing negative values
    #[arg(long, allow_hyphen_values = true)]
    pub betas: Option<String>,
    /// With --domain, also scan these betas for the onset of domain < disk
    #[arg(long, allow_hyphen_values = true)]
    pub threshold_scan: Option<String>,
}

#[derive(Debug, Args)]
pub struct FemArgs {
    #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
    pub domain: Option<PathBuf>,
    /// Mesh JSON file with vertices, triangles and boundary_edges
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
    /// Add the Richardson value from three nested meshes
    #[arg(long, conflicts_with = "mesh")]
    pub refined: bool,
    /// Include nodal values in the report
    #[arg(long)]
    pub eigenvector: bool,
    /// Write the generated mesh to this file
    #[arg(long)]
    pub export_mesh: Option<PathBuf>,
}

/// Run a parsed command line; returns the process exit code. Reports go to
/// `stdout` unless an output directory is configured, diagnostics to `stderr`.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = RunConfig::resolve(&cli.overrides).and_then(|config| {
        if let Some(n) = config.threads {
            // A pool may already exist when called twice in one process.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        commands::dispatch(&cli.command, &config, stdout)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
