//! `plaplab`: batch front end for the p-Laplacian laboratory.
//!
//! Every run writes its artifacts into `--out` through temp-file renames and
//! finishes with `manifest.txt`, which echoes the resolved configuration.
//! Exit status is 0 on success, 1 when a solver or check fails (diagnostics
//! are still written), 2 on usage errors.

mod args;
mod commands;
mod output;
mod sweep;
mod verify;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use output::{resolved_arguments, KeyValues, Output};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, inputs or parameters.
    Usage(String),
    /// A solver or check failed after the inputs were accepted.
    Failure(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<plaplab_core::Error> for CliError {
    fn from(e: plaplab_core::Error) -> Self {
        use plaplab_core::Error as E;
        match e {
            E::InvalidSpace(_)
            | E::Parse { .. }
            | E::VertexOutOfRange { .. }
            | E::DimensionMismatch { .. }
            | E::InvalidParameter(_)
            | E::Disconnected { .. }
            | E::NonzeroMean { .. }
            | E::DenseCapExceeded { .. }
            | E::Io(_) => CliError::Usage(e.to_string()),
            E::NonConvergence { .. } | E::Hypothesis(_) | E::Degenerate(_) | E::Fixedpoint(_) => {
                CliError::Failure(e.to_string())
            }
        }
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    let mut manifest = KeyValues::default();
    manifest.push("version", env!("CARGO_PKG_VERSION"));
    resolved_arguments(&Cli::command(), &matches, "", &mut manifest);

    let result = Output::create(&cli.out).and_then(|mut out| {
        let status = commands::run(&cli, &mut out, &mut manifest);
        manifest.push("status", if status.is_ok() { "ok" } else { "failed" });
        for name in out.written().to_vec() {
            manifest.push("artifact", name);
        }
        out.write("manifest.txt", &manifest.render())?;
        status
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("failure: {msg}");
            ExitCode::from(1)
        }
    }
}
