//! `sigrecon`: simulate paths, compute signatures and recover shortest paths.
//!
//! Exit codes: 0 on success, 1 on any error, 2 on invalid usage, 3 when a
//! requested tolerance check fails.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, SimulateKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sigrecon_core::Error),

    #[error("invalid argument: {0}")]
    Usage(String),

    #[error("tolerance check failed: {0}")]
    Check(String),

    #[error("cannot create output directory {path}: {source}")]
    OutputDir { path: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Check(_) => 3,
            _ => 1,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = cli.out_dir;
    match cli.command {
        Command::Simulate { kind } => match kind {
            SimulateKind::Ou(a) => commands::simulate_ou(&out, &a),
            SimulateKind::Bm(a) => commands::simulate_bm(&out, &a),
        },
        Command::Sign(a) => commands::sign(&out, &a),
        Command::Reconstruct(a) => commands::reconstruct(&out, &a),
        Command::Compare(a) => commands::compare(&out, &a),
        Command::GammaSweep(a) => commands::gamma_sweep(&out, &a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
