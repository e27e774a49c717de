use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::error;
use pstokes_lab::config::{Config, Experiment};
use pstokes_lab::report::write_outputs;
use pstokes_lab::{run, LabError};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Ms,
    Glacier,
    Infsup,
}

/// Spectral study of block preconditioners for regularized p-Stokes flow.
#[derive(Debug, Parser)]
#[command(name = "pstokes-lab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Command,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated regularization values.
    #[arg(long)]
    eps: Option<String>,
    /// Finite-element pair (p2p1 or mini).
    #[arg(long)]
    element: Option<String>,
    /// Linearization (picard or newton).
    #[arg(long)]
    method: Option<String>,
    /// Schur-complement approximation (m, mnu or both).
    #[arg(long)]
    schur: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main_inner(cli: Cli) -> Result<(), LabError> {
    let experiment = match cli.experiment {
        Command::Ms => Experiment::Ms,
        Command::Glacier => Experiment::Glacier,
        Command::Infsup => Experiment::Infsup,
    };
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path, experiment)?,
        None => Config::defaults(experiment),
    };
    let overrides = [
        ("eps", cli.eps),
        ("element", cli.element),
        ("method", cli.method),
        ("schur", cli.schur),
        ("out", cli.out.map(|p| p.display().to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)
                .map_err(|msg| LabError::InvalidConfig(format!("--{key}: {msg}")))?;
        }
    }
    cfg.validate()?;
    let report = run(&cfg)?;
    for note in &report.notes {
        println!("{note}");
    }
    for path in write_outputs(&report, &cfg.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::FAILURE
        }
    }
}
