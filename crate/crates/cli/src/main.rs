mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Command, RunConfig, Settings};

/// Focusing Gibbs measure experiments: ground states, sharp constants,
/// drift lower bounds and partition-function rates.
///
/// Settings come from flags, then from the JSON file given by --config, then
/// from built-in defaults. Output CSVs go to --out or $GIBBSLAB_OUT_DIR.
#[derive(Debug, Parser)]
#[command(name = "gibbslab", version)]
struct Cli {
    /// JSON file with keys mirroring the long flags (e.g. {"d": 1, "K": 2.0, "nList": [16, 32]})
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// GNS ground state Q: ||Q||_{L2} and C_GNS
    Q(Settings),
    /// Constrained supremum C_K on a band-limited box (critical p)
    Ck(Settings),
    /// Finite-N torus constant C_{K,N} (critical p)
    Ckn(Settings),
    /// Bernstein constant C_B of the unit-ball multiplier
    Cb(Settings),
    /// Draws of the truncated free field Y_N as coefficient CSV
    Sample(Settings),
    /// E||ζ_N(1) − Y_N||² and the kinetic cost across nList
    ZetaCheck(Settings),
    /// Drift lower bound and its B-term breakdown across nList (or N)
    Lowerbound(Settings),
    /// Direct Monte Carlo estimate of log Z_{K,N} across nList (or N)
    McZ(Settings),
    /// Drift lower bounds across nList and the fitted divergence rate
    Rate(Settings),
}

impl Sub {
    fn split(self) -> (Command, Settings) {
        match self {
            Sub::Q(s) => (Command::Q, s),
            Sub::Ck(s) => (Command::Ck, s),
            Sub::Ckn(s) => (Command::Ckn, s),
            Sub::Cb(s) => (Command::Cb, s),
            Sub::Sample(s) => (Command::Sample, s),
            Sub::ZetaCheck(s) => (Command::ZetaCheck, s),
            Sub::Lowerbound(s) => (Command::Lowerbound, s),
            Sub::McZ(s) => (Command::McZ, s),
            Sub::Rate(s) => (Command::Rate, s),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] gibbslab::Error),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(gibbslab::Error::Precondition(_) | gibbslab::Error::Config(_)) => 2,
            CliError::Core(_) => 1,
            CliError::NotConverged(_) => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = (|| {
        let (command, flags) = cli.command.split();
        let settings = match &cli.config {
            Some(path) => flags.over(Settings::from_file(path)?),
            None => flags,
        };
        let config = RunConfig::resolve(command, settings)?;
        run::run(config)
    })();
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
