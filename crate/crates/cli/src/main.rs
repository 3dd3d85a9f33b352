//! `steklov` command-line front end.
//!
//! Exit codes: 0 success, 1 bad arguments, 2 numerical failure, 3 I/O failure.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use steklov::SteklovError;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Arg(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Arg(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<SteklovError> for CliError {
    fn from(e: SteklovError) -> Self {
        match e {
            SteklovError::InvalidArgument { .. } => CliError::Arg(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Arg(format!("THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Weyl(a) => commands::weyl(a),
        Command::Constants(a) => commands::constants(a),
        Command::Sigma1(a) => commands::first(a),
        Command::InvertRectangle(a) => commands::invert(a),
        Command::Isoperimetric(a) => commands::isoperimetric(a),
        Command::Concentration(a) => commands::concentration(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e {
                CliError::Arg(_) => "argument error",
                CliError::Numerical(_) => "numerical failure",
                CliError::Io(_) => "I/O error",
            };
            eprintln!("error ({kind}): {e}");
            ExitCode::from(e.code())
        }
    }
}
