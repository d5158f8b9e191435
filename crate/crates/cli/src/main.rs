use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

#[derive(Debug, Parser)]
#[command(name = "annloewner", version, about = "Loewner evolution on annuli: kernels, flows, types and chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for JSON reports and CSV series.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for sampled configurations.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Relative solver tolerance (absolute tolerance keeps its ratio).
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Evaluate the Villat kernel and run free-term and reconstruction checks.
    Kernel,
    /// Integrate the evolution family for a set of starting points.
    Evolve,
    /// Validate driving data and report its conformal type.
    Classify,
    /// Run the finite-horizon chain verification suite.
    Chain,
    /// Check driving data against the admissibility conditions.
    Validate,
    /// Run the acceptance suite.
    Selftest,
}

/// Outcome classes, one per exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Verification(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<annloewner::Error> for Failure {
    fn from(e: annloewner::Error) -> Self {
        use annloewner::Error as E;
        match e {
            E::Domain(_) | E::InvalidInput(_) | E::MassCondition(_) | E::DegenerateTime(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("ANNLOEWNER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("ANNLOEWNER_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let opts = commands::Options {
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        tol: cli.tol,
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Kernel => commands::kernel(&opts),
        Command::Evolve => commands::evolve(&opts),
        Command::Classify => commands::classify(&opts),
        Command::Chain => commands::chain(&opts),
        Command::Validate => commands::validate(&opts),
        Command::Selftest => commands::selftest(&opts),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code())
        }
    }
}
