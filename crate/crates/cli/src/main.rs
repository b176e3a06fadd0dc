//! varwave: spectral analysis and periodic-solution continuation for the
//! variable coefficient wave equation on the T/2-antiperiodic subspace.

mod commands;
mod config;
mod emit;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

use config::RunConfig;
use varwave_core::VarwaveError;

/// Exit-code carrying error: 1 hypothesis failure, 2 numerical failure,
/// 3 config error.
#[derive(Debug)]
pub enum CliError {
    Hypothesis(String),
    Numerical(String),
    Config(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Hypothesis(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Hypothesis(m) | CliError::Numerical(m) | CliError::Config(m) => m,
        }
    }
}

impl From<VarwaveError> for CliError {
    fn from(e: VarwaveError) -> Self {
        match &e {
            VarwaveError::InvalidInput(_)
            | VarwaveError::ProfileRejected(_)
            | VarwaveError::GridMismatch(_)
            | VarwaveError::UnderResolved(_)
            | VarwaveError::PeriodParity { .. }
            | VarwaveError::LevelOnSpectrum { .. }
            | VarwaveError::WindowTooSmall(_) => CliError::Config(e.to_string()),
            VarwaveError::NearResonance { .. } => CliError::Hypothesis(e.to_string()),
            VarwaveError::EigenSolveFailed { .. }
            | VarwaveError::NoConvergence(_)
            | VarwaveError::NewtonDiverged { .. }
            | VarwaveError::SymmetryViolation { .. }
            | VarwaveError::ResonantMode { .. }
            | VarwaveError::NonFinite(_) => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "varwave",
    version,
    about = "Spectral toolkit for the variable coefficient wave equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (TOML sections: coefficient, period, spectrum,
    /// nonlinearity, solver, output)
    #[arg(long)]
    config: PathBuf,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectrum window n_max override
    #[arg(long)]
    nmax: Option<usize>,
    /// Spectrum window m_max override
    #[arg(long)]
    mmax: Option<u32>,
    /// Solver seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Output format override (csv | json)
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sturm–Liouville eigenvalues and asymptotic defects (CSV)
    Spectrum(CommonArgs),
    /// Wave-operator spectrum window, bracketing pair and kernel (CSV + JSON)
    Gaps(CommonArgs),
    /// Nonresonance hypothesis check (JSON; exit 1 on verdict fail)
    Check(CommonArgs),
    /// Homotopy continuation solve (runs check first)
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Solve even if the nonresonance check fails
        #[arg(long)]
        force: bool,
    },
    /// Residuals and bounds for a stored solution
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Solution JSON produced by `solve`
        #[arg(long)]
        solution: PathBuf,
    },
    /// Newton from random odd starts; reports distinct solutions
    #[command(name = "probe-uniqueness")]
    ProbeUniqueness {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of random starts
        #[arg(long, default_value_t = 20)]
        starts: usize,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    if let Some(nmax) = common.nmax {
        cfg.spectrum.n_max = nmax;
    }
    if let Some(mmax) = common.mmax {
        cfg.spectrum.m_max = mmax;
    }
    if let Some(seed) = common.seed {
        if let Some(solver) = cfg.solver.as_mut() {
            solver.seed = seed;
        }
    }
    if let Some(format) = &common.format {
        if format != "csv" && format != "json" {
            return Err(CliError::Config(format!(
                "--format must be csv or json, got {format}"
            )));
        }
        cfg.output.format = format.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Spectrum(common) => commands::run_spectrum(&load_config(common)?),
        Command::Gaps(common) => commands::run_gaps(&load_config(common)?),
        Command::Check(common) => commands::run_check(&load_config(common)?),
        Command::Solve { common, force } => commands::run_solve(&load_config(common)?, *force),
        Command::Verify { common, solution } => {
            commands::run_verify(&load_config(common)?, solution)
        }
        Command::ProbeUniqueness { common, starts } => {
            commands::run_probe(&load_config(common)?, *starts)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(summary) => {
            println!("{summary}");
        }
        Err(e) => {
            eprintln!("varwave: {}", e.message());
            std::process::exit(e.exit_code());
        }
    }
}
