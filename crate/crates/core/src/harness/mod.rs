//! Experiment configs, verification suites and plot-data emission.

mod config;
mod plot;
mod suites;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{run_config, Experiment, ExperimentConfig, OutputFormat, SweepSpec, TraceSpec, TubeSpec};
pub use plot::{emit_plot_data, parse_trace_csv};
pub use suites::{verify_suite, SUITES};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown suite `{0}` (expected one of: {list})", list = SUITES.join(", "))]
    UnknownSuite(String),
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: usize, message: String },
}

impl HarnessError {
    pub(crate) fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        HarnessError::Stage {
            stage,
            message: e.to_string(),
        }
    }
}

/// One measured claim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub citation: String,
    pub measured: serde_json::Value,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn new(suite: &str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        VerifyReport {
            suite: suite.to_string(),
            checks,
            pass,
        }
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn to_text(&self) -> String {
        let mut s = format!("suite {}: {}\n", self.suite, if self.pass { "PASS" } else { "FAIL" });
        for c in &self.checks {
            s.push_str(&format!(
                "  {} {} [{}] measured={} tolerance={}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.citation,
                c.measured,
                c.tolerance
            ));
        }
        s
    }
}

/// Writes through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}
