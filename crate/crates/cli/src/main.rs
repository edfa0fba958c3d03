//! `fiberatom` command-line driver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fiberatom::spectroscopy::ModelVariant;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input: unreadable config, invalid parameters or arguments.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<fiberatom::Error> for CliError {
    fn from(e: fiberatom::Error) -> Self {
        use fiberatom::Error as E;
        match e {
            E::Invalid(_) | E::Parse { .. } | E::Range { .. } | E::Grid { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "fiberatom", version, about = "Evanescent-field spectroscopy of cold atoms around a nanofiber")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the guided mode and write its report and intensity profile.
    Mode,
    /// Monte Carlo density factor at one detuning and power.
    Density {
        /// Probe power (W).
        #[arg(long)]
        power: f64,
        /// Probe detuning (Hz).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        detuning: f64,
    },
    /// Absorbance spectrum over the configured detuning grid.
    Spectrum {
        #[arg(long)]
        power: f64,
        #[arg(long, default_value_t = ModelVariant::Full)]
        variant: ModelVariant,
    },
    /// Full and reduced line widths over the configured power grid.
    Sweep,
    /// Fit atom number and frequency offset to a measured trace.
    Fit {
        /// CSV with `detuning_hz, transmission` columns.
        #[arg(long)]
        trace: PathBuf,
        /// Probe power of the measurement (W).
        #[arg(long)]
        power: f64,
        #[arg(long, default_value_t = ModelVariant::Full)]
        variant: ModelVariant,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    config.validate()?;
    match cli.command {
        Command::Mode => commands::mode(&config),
        Command::Density { power, detuning } => commands::density(&config, power, detuning),
        Command::Spectrum { power, variant } => commands::spectrum(&config, power, variant),
        Command::Sweep => commands::sweep(&config),
        Command::Fit { trace, power, variant } => commands::fit(&config, &trace, power, variant),
        Command::Config => {
            print!("{}", config.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Runtime(_) => 1,
            })
        }
    }
}
