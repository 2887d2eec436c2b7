//! `bos` - command-line front end for the operator toolkit: assembly dumps,
//! inverse application, factorization checks, resolvents, Hilbert-Schmidt
//! trends, spectra, time evolution, growth envelopes, and an umbrella
//! verification command. Every run writes CSV data plus one JSON report and
//! exits 0 only when all quantitative checks pass.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bos_core::error::CoreError;

use crate::config::{ConfigError, ConfigFile};

#[derive(Debug, Parser)]
#[command(name = "bos", version, about = "Numerical toolkit for the periodic operator L y = ((1 - a cos x) y + b sin x y')'")]
pub struct Cli {
    /// Flat key = value config file; flags override file entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every randomized check; recorded in the report.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory for CSV artifacts and the JSON report.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// csv: write data files next to the report; json: embed data in the report.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump one operator matrix (nonzero entries, `m,n,re,im`).
    Assemble(commands::AssembleArgs),
    /// Apply the inverse of M to a sampled right-hand side.
    Minverse(commands::MinverseArgs),
    /// Verify the factorization, adjoint and composed-inverse contracts.
    FactorCheck(commands::FactorCheckArgs),
    /// Apply the block resolvent (L_N - lambda)^-1 to a sampled function.
    Resolvent(commands::ResolventArgs),
    /// Hilbert-Schmidt norm of the inverted mean-zero block across truncations.
    HsNorm(commands::HsNormArgs),
    /// Eigenvalues of the mean-zero block with convergence diagnostics.
    Spectrum(commands::SpectrumArgs),
    /// Integrate y_t + L y = 0 and record the norm history.
    Evolve(commands::EvolveArgs),
    /// Transient-growth envelope ln ||exp(-t L11_N)||_2 over times and truncations.
    Growth(commands::GrowthArgs),
    /// Run the full check suite over a parameter grid.
    VerifyAll(commands::VerifyAllArgs),
}

/// Failure modes with their contractual exit codes: 1 = a quantitative
/// check failed, 2 = invalid configuration, 3 = numerical failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    ConfigFile(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::ConfigFile(_) | CliError::Io(_) => 2,
            CliError::Core(core) => match core {
                CoreError::InvalidParams(_)
                | CoreError::InvalidInput(_)
                | CoreError::DimensionMismatch(_)
                | CoreError::GridTooCoarse { .. }
                | CoreError::Io(_) => 2,
                CoreError::QuadratureNonConvergence { .. }
                | CoreError::SingularSystem(_)
                | CoreError::LambdaNearEigenvalue { .. }
                | CoreError::EigenFailure(_)
                | CoreError::EvolutionOverflow { .. } => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) | CliError::ConfigFile(_) => "invalid-config",
            CliError::Io(_) => "io",
            CliError::Core(core) => match core {
                CoreError::InvalidParams(_) => "regime-violation",
                CoreError::InvalidInput(_) => "invalid-input",
                CoreError::DimensionMismatch(_) => "dimension-mismatch",
                CoreError::GridTooCoarse { .. } => "grid-too-coarse",
                CoreError::Io(_) => "io",
                CoreError::QuadratureNonConvergence { .. } => "quadrature-non-convergence",
                CoreError::SingularSystem(_) => "singular-system",
                CoreError::LambdaNearEigenvalue { .. } => "lambda-near-eigenvalue",
                CoreError::EigenFailure(_) => "eigensolver-failure",
                CoreError::EvolutionOverflow { .. } => "evolution-overflow",
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => return fail(CliError::from(e)),
        },
        None => ConfigFile::default(),
    };
    match commands::run(cli, file) {
        Ok(report) => {
            for check in &report.checks {
                println!(
                    "check {} : {} = {:e} ({} {:e})",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.value,
                    check.comparison,
                    check.threshold
                );
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    let payload = serde_json::json!({
        "error": {
            "kind": e.kind(),
            "message": e.to_string(),
            "exit_code": e.exit_code(),
        }
    });
    eprintln!("{payload}");
    ExitCode::from(e.exit_code())
}
