//! Batch runner for the `jkolip` experiments.
//!
//! A run reads a versioned JSON [`config::RunConfig`], executes one
//! experiment and writes its artifacts to an output directory:
//! `config.json`, `summary.json`, `theorem_checks.json`, `summary.txt` and
//! experiment-specific CSV files. An aborted run leaves a `FAILED` marker.

pub mod config;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod report;

use std::path::{Path, PathBuf};

pub use config::{Experiment, RunConfig, KINDS};
pub use error::{CliError, Result};
pub use report::{Check, Report};

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    /// The configuration could not be read or is invalid.
    Config(CliError),
    /// The run started and aborted; a `FAILED` marker was written.
    Aborted { dir: PathBuf, error: CliError },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Aborted { dir, error } => {
                write!(f, "run aborted ({}): {error}", dir.display())
            }
        }
    }
}

impl std::error::Error for RunError {}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: Report,
}

/// Execute an experiment in memory; custom CSV inputs resolve against `base`.
pub fn run_in_memory(config: &RunConfig, base: &Path, jobs: Option<usize>) -> Result<Report> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::config("--jobs", e.to_string()))?;
    pool.install(|| experiments::run_experiment(config, base))
}

/// Read, validate and run a config file, writing artifacts.
pub fn run_file(path: &Path, opts: &RunOptions) -> std::result::Result<RunOutcome, RunError> {
    let mut config = RunConfig::from_path(path).map_err(RunError::Config)?;
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if opts.jobs == Some(0) {
        return Err(RunError::Config(CliError::config("--jobs", "must be >= 1")));
    }
    let dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("jkolip-out").join(config.experiment.kind()));
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    report::prepare_dir(&dir, &config).map_err(RunError::Config)?;
    let abort = |error: CliError| {
        let _ = report::write_failed(&dir, &error);
        RunError::Aborted {
            dir: dir.clone(),
            error,
        }
    };
    let report = run_in_memory(&config, &base, opts.jobs).map_err(abort)?;
    report::write_report(&dir, &report, config.seed).map_err(abort)?;
    Ok(RunOutcome { dir, report })
}

/// Text for `list-experiments`.
pub fn list_text() -> String {
    KINDS
        .iter()
        .map(|(k, d)| format!("{k:<16} {d}\n"))
        .collect()
}

/// Text for `describe <kind>`: a description and a complete config with
/// every default filled in.
pub fn describe_text(kind: &str) -> Result<String> {
    let experiment = Experiment::default_for(kind)?;
    let description = KINDS
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|(_, d)| *d)
        .unwrap_or("");
    let example = RunConfig {
        schema_version: config::SCHEMA_VERSION,
        seed: 0,
        output_dir: None,
        experiment,
    };
    Ok(format!(
        "{kind}: {description}\n\nDefaults (every field may be omitted or overridden):\n{}\n",
        serde_json::to_string_pretty(&example)?
    ))
}
