use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::result::Result;

use clap::{Parser, Subcommand, ValueEnum};
use possfuse::commands::{self, Output, Settings};
use possfuse::CliError;
use possfuse_core::prelude::*;
use possfuse_core::DEFAULT_TOLERANCE;

#[derive(Parser)]
#[command(
    name = "possfuse",
    version,
    about = "Fuse, transport and filter outer-measure constraints"
)]
struct Cli {
    /// Write the JSON report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for simulated observations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Absolute tolerance for equality and zero tests.
    #[arg(long, global = true, env = "POSSFUSE_TOLERANCE", default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Left,
    Right,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse two constraint documents.
    Fuse {
        left: PathBuf,
        right: PathBuf,
        /// Fuse under a general (ℓ, θ) kernel instead of pointwise products.
        #[arg(long)]
        kernel: Option<PathBuf>,
        /// Skip the kernel associativity check.
        #[arg(long)]
        no_verify_kernel: bool,
    },
    /// Push a constraint forward along a map.
    Push { constraint: PathBuf, map: PathBuf },
    /// Pull a constraint back along a map.
    Pull { constraint: PathBuf, map: PathBuf },
    /// Marginal of a constraint on a product space.
    Marginalize {
        constraint: PathBuf,
        #[arg(long, value_enum)]
        keep: Side,
    },
    /// Dempster's rule next to fusion of the matching constraints.
    Dempster { left: PathBuf, right: PathBuf },
    /// Run a linear-Gaussian scenario and emit per-step CSV.
    Filter {
        scenario: PathBuf,
        /// Add a quadrature check of every step's weight.
        #[arg(long)]
        oracle: bool,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Outer-measure axioms and, optionally, domination of a probability.
    Check {
        constraint: PathBuf,
        #[arg(long)]
        probability: Option<PathBuf>,
    },
}

fn write_to(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let res = match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|source| CliError::Io {
        path: path.map_or_else(|| "<stdout>".into(), |p| p.display().to_string()),
        source,
    })
}

fn run(cli: Cli) -> Result<Output, CliError> {
    if !(cli.tolerance.is_finite() && cli.tolerance >= 0.0) {
        return Err(Error::InvalidValue(format!("tolerance {} must be finite and >= 0", cli.tolerance)).into());
    }
    let s = Settings {
        tolerance: Tolerance::with_abs(cli.tolerance),
        seed: cli.seed,
    };
    let output = match &cli.command {
        Command::Fuse {
            left,
            right,
            kernel,
            no_verify_kernel,
        } => commands::fuse(left, right, kernel.as_deref(), !no_verify_kernel, &s)?,
        Command::Push { constraint, map } => commands::push(constraint, map, &s)?,
        Command::Pull { constraint, map } => commands::pull(constraint, map, &s)?,
        Command::Marginalize { constraint, keep } => {
            let keep = match keep {
                Side::Left => Factor::Left,
                Side::Right => Factor::Right,
            };
            commands::marginalize(constraint, keep, &s)?
        }
        Command::Dempster { left, right } => commands::dempster(left, right, &s)?,
        Command::Filter { scenario, oracle, .. } => commands::filter(scenario, *oracle, &s)?,
        Command::Check {
            constraint,
            probability,
        } => commands::check(constraint, probability.as_deref(), &s)?,
    };
    match (&cli.command, &output.csv) {
        (Command::Filter { csv: path, .. }, Some(csv)) => {
            write_to(path.as_deref(), csv)?;
            if cli.out.is_some() || path.is_some() {
                write_to(cli.out.as_deref(), &output.report.render())?;
            }
        }
        _ => write_to(cli.out.as_deref(), &output.report.render())?,
    }
    Ok(output)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Output { failure: Some(msg), .. }) => {
            let err = CliError::CheckFailed(msg);
            eprintln!("possfuse: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("possfuse: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
