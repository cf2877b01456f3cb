//! `heattrace`: batch evaluation of counting functions and heat traces,
//! writing CSV tables and a JSON run manifest.
//!
//! Exit codes: 0 success, 1 a `verify` check failed, 2 usage or I/O error.

mod args;
mod grid;
mod manifest;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Action, Cli, Command};
use manifest::{InputFile, Manifest};
use run::UsageError;

const VERIFICATION_FAILED: u8 = 1;
const USAGE: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.action {
        Action::Run(cmd) => run_and_record(&cmd, cli.manifest.as_deref()),
        Action::Rerun(r) => rerun(&r.from, cli.manifest.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(VERIFICATION_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE)
        }
    }
}

/// Runs `cmd`, then writes the manifest once every output is on disk.
fn run_and_record(cmd: &Command, manifest_path: Option<&Path>) -> Result<bool, UsageError> {
    let start = Instant::now();
    let outcome = run::execute(cmd)?;
    let inputs = outcome
        .inputs
        .iter()
        .map(|p| InputFile::hash(p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| UsageError(format!("hashing inputs: {e}")))?;
    let manifest = Manifest {
        command: cmd.clone(),
        inputs,
        outputs: outcome.outputs,
        version: env!("CARGO_PKG_VERSION").to_string(),
        duration_s: start.elapsed().as_secs_f64(),
    };
    let path = manifest_path
        .map(PathBuf::from)
        .unwrap_or_else(|| manifest::default_path(cmd.out()));
    manifest
        .write(&path)
        .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    log::info!("{} finished; manifest at {}", cmd.name(), path.display());
    Ok(outcome.passed)
}

/// Replays a manifest after checking that its inputs are unchanged.
fn rerun(from: &Path, manifest_path: Option<&Path>) -> Result<bool, UsageError> {
    let recorded = Manifest::load(from).map_err(UsageError)?;
    for input in &recorded.inputs {
        let now = InputFile::hash(&input.path).map_err(|e| UsageError(format!("{}: {e}", input.path.display())))?;
        if now.sha256 != input.sha256 {
            return Err(UsageError(format!(
                "{} changed since the manifest was written",
                input.path.display()
            )));
        }
    }
    if recorded.version != env!("CARGO_PKG_VERSION") {
        log::warn!("manifest written by version {}", recorded.version);
    }
    run_and_record(&recorded.command, Some(manifest_path.unwrap_or(from)))
}
