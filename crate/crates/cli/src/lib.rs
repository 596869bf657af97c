//! Command-line front end for `hetasym-core`: config resolution, CSV
//! input and output, and one pipeline per subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use commands::Runtime;
use config::RunConfig;
use error::{io_error, CliError};

#[derive(Debug, Parser)]
#[command(name = "hetasym", version, about = "Heterodyne asymmetry analysis for LLO CV-QKD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Input CSV (trace, or density matrix for `fidelity`).
    #[arg(long, global = true)]
    pub input: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Fock dimension for tomography.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub convention: Option<ConventionArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    Sqrt,
    Squared,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Simulate an asymmetric heterodyne trace of the reference signal.
    Simulate,
    /// Min-max symmetrise a trace and report the asymmetry noise.
    Scale,
    /// Phase deviation between a trace and its symmetrised copy.
    PhaseDeviation,
    /// Key rate against distance for several detector excess noises.
    KeyrateSweep,
    /// MLE reconstruction, Wigner grid and coherent-state fidelity.
    Tomography,
    /// Fidelity between two density-matrix files.
    Fidelity,
}

/// Defaults, then config file, then environment, then flags.
pub fn resolve_config<I>(cli: &Cli, env: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_env(env)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(i) = &cli.input {
        cfg.input = i.clone();
    }
    if let Some(d) = cli.dim {
        cfg.dim = d;
    }
    if let Some(c) = cli.convention {
        cfg.convention = config::Convention(match c {
            ConventionArg::Sqrt => hetasym_core::FidelityConvention::Sqrt,
            ConventionArg::Squared => hetasym_core::FidelityConvention::Squared,
        });
    }
    Ok(cfg)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Invalid("--jobs must be >= 1".into()));
    }
    let cfg = resolve_config(cli, std::env::vars())?;
    let rt = Runtime { jobs: cli.jobs };
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Scale => commands::scale(&cfg),
        Command::PhaseDeviation => commands::phase_deviation_cmd(&cfg),
        Command::KeyrateSweep => commands::keyrate_sweep(&cfg, rt),
        Command::Tomography => commands::tomography_cmd(&cfg, rt),
        Command::Fidelity => commands::fidelity_cmd(&cfg),
    }
}
