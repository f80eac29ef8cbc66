//! Report data model: verdicts, bound checks and the persisted run report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one check. `Advisory` marks one-sided theory gates (their
/// violation predicts nothing), `Skipped` marks gates whose hypothesis was
/// not met.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
    Advisory,
}

/// A two-sided inequality check with the measured values.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
    pub verdict: Verdict,
    pub detail: String,
}

impl BoundCheck {
    pub fn new(name: &str, lhs: f64, rhs: f64, passed: bool, detail: impl Into<String>) -> Self {
        BoundCheck {
            name: name.to_string(),
            lhs,
            rhs,
            passed,
            verdict: if passed { Verdict::Pass } else { Verdict::Fail },
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, detail: impl Into<String>) -> Self {
        BoundCheck {
            name: name.to_string(),
            lhs: 0.0,
            rhs: 0.0,
            passed: true,
            verdict: Verdict::Skipped,
            detail: detail.into(),
        }
    }

    pub fn advisory(name: &str, lhs: f64, rhs: f64, detail: impl Into<String>) -> Self {
        BoundCheck {
            name: name.to_string(),
            lhs,
            rhs,
            passed: true,
            verdict: Verdict::Advisory,
            detail: detail.into(),
        }
    }
}

/// Wall-clock timings; excluded from determinism comparisons.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
}

/// Resolved run configuration echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub command: String,
    pub problem_path: String,
    pub output_dir: String,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub overrides: BTreeMap<String, f64>,
}

/// The persisted `report.json`. Field order is the serialization order, so
/// reports from identical runs are byte-identical apart from `timing`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub versions: BTreeMap<String, String>,
    pub config: ConfigEcho,
    pub problem: serde_json::Value,
    pub validation: crate::problem::ValidationReport,
    pub results: serde_json::Value,
    pub timing: Timing,
}

impl RunReport {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

pub fn crate_version_map() -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("kawahara".to_string(), env!("CARGO_PKG_VERSION").to_string());
    m
}
