use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Toric pluripotential computations: geodesics, capacities, energies and a
/// self-check suite.
#[derive(Debug, Parser)]
#[command(name = "plurigeo", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem description (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Grid spacing.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Box side: grids cover `[-S, 0]^n`.
    #[arg(long = "S", global = true)]
    pub side: Option<f64>,
    /// Rows of the `t` grid, endpoints included.
    #[arg(long = "t-steps", global = true)]
    pub t_steps: Option<usize>,
    /// Stopping tolerance of the truncation escalation.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed of the randomized checks.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geodesic between two toric functions, with its energy profile.
    Geodesic,
    /// Capacities of one or two toric compacts, with Brunn-Minkowski margins.
    Capacity,
    /// Energy, Monge-Ampère measure and pairing identities.
    Energy,
    /// Runs the twelve-criterion self-check suite.
    Verify {
        /// Drop the `n!` factor of the complex Monge-Ampère measure; the
        /// suite is expected to fail.
        #[arg(long)]
        drop_factorial: bool,
        /// Comma-separated criterion ids; all twelve by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Outcome classes, one exit code each.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Verification(String),
    Obstruction(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Obstruction(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Verification(m) | Failure::Obstruction(m) => m,
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("PLURIGEO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Validation(format!("PLURIGEO_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Validation(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("plurigeo: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
