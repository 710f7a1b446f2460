//! Run artifacts: config echo, JSON summaries, CSV tables and a text summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use jkolip::lipverify::{CheckState, TheoremCheck};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Outcome of one enabled check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// One theorem check with the instance it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremRow {
    pub instance: String,
    #[serde(flatten)]
    pub check: TheoremCheck,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub kind: &'static str,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Experiment-specific numbers.
    pub summary: serde_json::Value,
    pub theorem_rows: Vec<TheoremRow>,
    /// Extra artifacts, `(file name, contents)`.
    pub files: Vec<(String, Vec<u8>)>,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    kind: &'a str,
    seed: u64,
    passed: bool,
    checks: &'a [Check],
    warnings: &'a [String],
    results: &'a serde_json::Value,
}

impl Report {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            checks: Vec::new(),
            warnings: Vec::new(),
            summary: serde_json::Value::Null,
            theorem_rows: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn summary_json(&self, seed: u64) -> Result<String> {
        let s = SummaryFile {
            kind: self.kind,
            seed,
            passed: self.passed(),
            checks: &self.checks,
            warnings: &self.warnings,
            results: &self.summary,
        };
        Ok(serde_json::to_string_pretty(&s)? + "\n")
    }

    pub fn theorem_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.theorem_rows)? + "\n")
    }

    /// Result line and one line per check.
    pub fn checks_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind: {}", self.kind);
        let _ = writeln!(
            out,
            "result: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        out
    }

    /// Plain-text summary: the checks, warnings, then one line per theorem
    /// check.
    pub fn summary_text(&self) -> String {
        let mut out = self.checks_text();
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        if !self.theorem_rows.is_empty() {
            let _ = writeln!(
                out,
                "\n{:<14} {:>7} {:>7} {:>6} {:>13} {:>13} {:>13} {:>8}",
                "instance", "alpha", "tau", "n", "lhs", "rhs", "margin", "pass"
            );
            for r in &self.theorem_rows {
                let c = &r.check;
                let state = match c.state {
                    CheckState::Pass => "pass",
                    CheckState::Fail => "FAIL",
                    CheckState::Vacuous => "vacuous",
                };
                let _ = writeln!(
                    out,
                    "{:<14} {:>7} {:>7} {:>6} {:>13.6e} {:>13.6e} {:>13.6e} {:>8}",
                    r.instance, c.alpha, c.tau, c.n, c.lhs, c.rhs, c.margin, state
                );
            }
        }
        out
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

pub fn prepare_dir(dir: &Path, config: &RunConfig) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
    let stale = dir.join("FAILED");
    if stale.exists() {
        fs::remove_file(&stale)
            .map_err(|e| CliError::io(format!("cannot remove {}", stale.display()), e))?;
    }
    write(
        dir,
        "config.json",
        (serde_json::to_string_pretty(config)? + "\n").as_bytes(),
    )
}

pub fn write_report(dir: &Path, report: &Report, seed: u64) -> Result<()> {
    write(dir, "summary.json", report.summary_json(seed)?.as_bytes())?;
    write(
        dir,
        "theorem_checks.json",
        report.theorem_json()?.as_bytes(),
    )?;
    write(dir, "summary.txt", report.summary_text().as_bytes())?;
    for (name, bytes) in &report.files {
        write(dir, name, bytes)?;
    }
    Ok(())
}

/// Marker left behind when a run aborts.
pub fn write_failed(dir: &Path, error: &CliError) -> Result<()> {
    write(dir, "FAILED", format!("{error}\n").as_bytes())
}
