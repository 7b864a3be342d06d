//! `sisac`: region evaluation and sequential-policy simulation for secure
//! integrated sensing and communication over finite state-dependent
//! channels.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Input parsing or validation failure (exit code 2).
    Parse(String),
    /// Model-assumption violation (exit code 3).
    Model(String),
    /// I/O failure (exit code 4).
    Io(String),
}

impl CliError {
    pub fn parse(msg: String) -> Self {
        CliError::Parse(msg)
    }

    pub fn io(msg: String) -> Self {
        CliError::Io(msg)
    }

    pub fn from_core(e: sisac_core::Error) -> Self {
        match e {
            sisac_core::Error::DegenerateModel { .. } => CliError::Model(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Model(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Parse(m) | CliError::Model(m) | CliError::Io(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Bits,
    Nats,
}

#[derive(Parser, Debug)]
#[command(
    name = "sisac",
    version,
    about = "Achievable-region evaluation and Monte Carlo simulation of sequential secure integrated sensing and communication"
)]
struct Cli {
    /// Units for printed rate summaries (files always carry both).
    #[arg(long, global = true, value_enum, default_value = "bits")]
    units: Units,
    /// Worker threads for simulation campaigns (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Add a wall-clock stamp to the manifest (off by default so reruns
    /// are byte-identical).
    #[arg(long, global = true)]
    stamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the per-state rate and exponent table for a family/policy.
    Metrics {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Also write the table as JSON under this prefix.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the achievable region and emit boundary CSV plus summary.
    Region {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation campaign and emit reports and per-trial CSV.
    Simulate {
        #[arg(long)]
        sim: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Master-seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reproduce the worked all-BSC example: trade-off boundary, labeled
    /// operating points, time-sharing segment, and the regime check.
    ReproduceFig2 {
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    let result = match &cli.command {
        Command::Metrics {
            family,
            policy,
            out,
        } => commands::metrics::run(family, policy, out.as_deref(), cli.stamp),
        Command::Region { family, sweep, out } => {
            commands::region::run(family, sweep, out, cli.units, cli.stamp)
        }
        Command::Simulate {
            sim,
            family,
            policy,
            out,
            seed,
        } => commands::simulate::run(sim, family, policy, out, *seed, cli.units, cli.stamp),
        Command::ReproduceFig2 { out } => commands::reproduce::run(out, cli.units, cli.stamp),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
