//! `quadrant`: spectral analysis of the quarter-lattice Hamiltonian with a
//! corner contact interaction.

mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use quadrant_core::oracle::Side;
use quadrant_core::{Error, Result};

use config::CommonArgs;

#[derive(Parser, Debug)]
#[command(name = "quadrant", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Min,
    Max,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report the spectral regime for (lambda, mu).
    Classify(CommonArgs),
    /// Solve for the discrete eigenvalue.
    Solve(CommonArgs),
    /// Reconstruct the bound state and write it out.
    Eigvec {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid output path (default: next to --out).
        #[arg(long)]
        grid: Option<PathBuf>,
    },
    /// Extreme eigenvalue of the truncated operator.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
        /// Spectrum edge to compute (default: the side of sign(mu)).
        #[arg(long, value_enum)]
        side: Option<SideArg>,
        /// Write the sparse matrix as `row col value` lines.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Scan mu at fixed lambda.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_negative_numbers = true)]
        mu_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Run the acceptance suite.
    Selftest(CommonArgs),
    /// Sample the boundary branch on the unit circle (CSV).
    Curve {
        #[arg(long, allow_negative_numbers = true)]
        nu: f64,
        #[arg(long, default_value_t = 256)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_) | Error::InvalidGrid { .. } => 2,
        Error::NoDiscreteEigenvalue { .. } => 3,
        Error::IllConditioned { .. } => 4,
        _ => 1,
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Classify(common) => {
            let cfg = common.resolve()?;
            emit(cfg.out.as_ref(), &commands::cmd_classify(&cfg)?)?;
        }
        Command::Solve(common) => {
            let cfg = common.resolve()?;
            emit(cfg.out.as_ref(), &commands::cmd_solve(&cfg)?)?;
        }
        Command::Eigvec { common, grid } => {
            let cfg = common.resolve()?;
            emit(cfg.out.as_ref(), &commands::cmd_eigvec(&cfg, grid)?)?;
        }
        Command::Oracle { common, side, export } => {
            let cfg = common.resolve()?;
            let side = side.map(|s| match s {
                SideArg::Min => Side::Min,
                SideArg::Max => Side::Max,
            });
            emit(cfg.out.as_ref(), &commands::cmd_oracle(&cfg, side, export)?)?;
        }
        Command::Sweep {
            common,
            mu_min,
            mu_max,
            points,
        } => {
            let cfg = common.resolve()?;
            let (text, warnings) = commands::cmd_sweep(&cfg, mu_min, mu_max, points)?;
            emit(cfg.out.as_ref(), &text)?;
            if warnings > 0 {
                eprintln!("warning: {warnings} sweep rows failed");
            }
        }
        Command::Selftest(common) => {
            let cfg = common.resolve()?;
            let (text, passed) = commands::cmd_selftest(&cfg)?;
            emit(cfg.out.as_ref(), &text)?;
            if !passed {
                eprintln!("selftest: some criteria failed");
                return Ok(1);
            }
        }
        Command::Curve { nu, samples, out } => {
            emit(out.as_ref(), &commands::cmd_curve(nu, samples)?)?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
