//! `ckngb`: lifetime analysis of circular k-out-of-n: G balanced systems
//! under shocks.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration error,
//! 3 infeasible system, 4 numerical failure.

mod commands;
mod config;
mod error;
mod validate;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ckngb::Exec;

use crate::commands::{Output, Quantity};
use crate::config::{load_config, Overrides};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ckngb", version, about = "Lifetime distributions of circular k-out-of-n: G balanced systems under shocks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config: n, k, r, bc, shock{preset | alpha,T}, plus options
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write the result here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Master seed for Monte Carlo runs
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo replications
    #[arg(long, global = true)]
    reps: Option<usize>,

    /// Largest shock count for pmf tables
    #[arg(long = "m-max", global = true)]
    m_max: Option<u32>,

    /// Right end of the time grid
    #[arg(long = "z-max", global = true)]
    z_max: Option<f64>,

    /// Worker threads (1 runs everything sequentially)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the minimum tie-sets
    Tiesets,
    /// Shock-number-to-failure pmf and survival, m = 1..m_max
    SntfPmf {
        /// Use the matrix route instead of the closed form
        #[arg(long)]
        matrix: bool,
        /// Also write the consolidated transition matrix as CSV
        #[arg(long, value_name = "PATH")]
        chain: Option<PathBuf>,
    },
    /// Moments of the shock number to failure
    SntfMoments,
    /// Time-to-failure density and survival on a grid, with summary
    Ttf {
        /// Number of grid points on [0, z_max]
        #[arg(long)]
        points: Option<usize>,
    },
    /// MSNTF over a (bc, n, k, r) grid
    SweepMsntf,
    /// MTTF and SCV of the time to failure over a grid and inter-shock laws
    SweepScv,
    /// Monte Carlo estimates with confidence intervals
    Simulate {
        /// Write a histogram CSV (bin_left, bin_right, count)
        #[arg(long, value_name = "PATH")]
        histogram: Option<PathBuf>,
        /// Quantity for the histogram; defaults to ttf when a shock law is set
        #[arg(long, value_enum)]
        quantity: Option<Quantity>,
    },
    /// Check analytic results against independent oracles
    Validate {
        /// Corrupt one transition probability first (negative control)
        #[arg(long, hide = true)]
        corrupt_chain: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ckngb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let exec = configure_threads(cli.threads)?;
    let overrides = Overrides {
        seed: cli.seed,
        reps: cli.reps,
        m_max: cli.m_max,
        z_max: cli.z_max,
    };
    let mut spec = load_config(cli.config.as_deref(), &overrides)?;
    if let Command::Ttf { points: Some(p) } = &cli.command {
        if *p < 2 {
            return Err(CliError::Config("--points must be >= 2".into()));
        }
        spec.z_points = *p;
    }
    eprintln!("ckngb: effective config {}", spec.to_json());

    let output = match cli.command {
        Command::Tiesets => commands::tiesets(&spec, exec)?,
        Command::SntfPmf { matrix, chain } => {
            let mut csv = String::new();
            let out = commands::sntf_pmf(&spec, matrix, chain.as_ref().map(|_| &mut csv))?;
            if let Some(path) = chain {
                write_file(&path, &csv)?;
            }
            out
        }
        Command::SntfMoments => commands::sntf_moments(&spec)?,
        Command::Ttf { .. } => commands::ttf(&spec, exec)?,
        Command::SweepMsntf => commands::sweep_msntf(&spec, exec)?,
        Command::SweepScv => commands::sweep_scv(&spec, exec)?,
        Command::Simulate { histogram, quantity } => {
            let sim = commands::simulate(&spec, quantity, exec)?;
            if let Some(path) = histogram {
                write_file(&path, &sim.histogram)?;
            }
            sim.summary
        }
        Command::Validate { corrupt_chain } => {
            let config = if spec.n.is_some() {
                spec.system("validate")?
            } else {
                commands::descriptive_case()
            };
            validate::validate(&config, spec.m_max, spec.reps, spec.seed, corrupt_chain, exec)?
        }
    };
    emit(cli.out.as_deref(), output)
}

fn configure_threads(threads: Option<usize>) -> Result<Exec, CliError> {
    match threads {
        None => Ok(Exec::default()),
        Some(0) => Err(CliError::Config("--threads must be >= 1".into())),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(t) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Config(format!("cannot start {t} threads: {e}")))?;
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => {
            eprintln!("ckngb: built without the `parallel` feature; running sequentially");
            Ok(Exec::Sequential)
        }
    }
}

fn emit(out: Option<&Path>, output: Output) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, &output.text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))?;
        }
    }
    output.status
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
