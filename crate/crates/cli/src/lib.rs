//! Scenario runner behind the `pullvexlab` binary: JSON configs in, JSON
//! reports, CSV tables and meshes out.

pub mod catalog;
pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{Command, ScenarioConfig, Tolerances};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("computation failed: {0}")]
    Compute(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// How a finished run is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Informational,
    Fail,
    HypothesisFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass | Outcome::Informational => 0,
            Outcome::Fail | Outcome::HypothesisFailed => 2,
        }
    }
}

/// Result of a run: the outcome and the directory holding its artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub command: Command,
    pub outcome: Outcome,
    pub output_dir: PathBuf,
}

/// Loads `config_path`, applies the command-line overrides and runs the
/// scenario.
pub fn run_file(
    command: Command,
    config_path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<RunSummary, CliError> {
    let config = ScenarioConfig::load(config_path, command, seed, out)?;
    run(&config)
}

pub fn run(config: &ScenarioConfig) -> Result<RunSummary, CliError> {
    output::ensure_dir(&config.output_dir)?;
    output::write_report(&config.resolved(), &config.output_dir.join("resolved_config.json"))?;
    let outcome = commands::execute(config)?;
    Ok(RunSummary { command: config.command, outcome, output_dir: config.output_dir.clone() })
}

/// Applies `PULLVEXLAB_THREADS` to the global rayon pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("PULLVEXLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::ConfigInvalid(format!("PULLVEXLAB_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::ConfigInvalid(format!("cannot set up {threads} worker threads: {e}")))
}
