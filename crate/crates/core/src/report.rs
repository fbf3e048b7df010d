//! Check records and their on-disk forms: `report.json`, `summary.txt` and
//! `curves.csv` (columns tau, residual, check_id).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One point of a scale/residual curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub id: String,
    pub operation: String,
    pub inputs: Value,
    /// sha256 of the canonical JSON of `inputs`.
    pub inputs_digest: String,
    pub metric: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub details: Value,
    pub curve: Vec<CurvePoint>,
}

/// Hex sha256 of a JSON value. serde_json keeps object keys sorted, so equal
/// values always hash equally.
pub fn digest(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("json values serialize");
    Sha256::digest(&bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Record {
    pub fn new(id: impl Into<String>, operation: impl Into<String>, inputs: Value) -> Self {
        Self {
            id: id.into(),
            operation: operation.into(),
            inputs_digest: digest(&inputs),
            inputs,
            metric: 0.0,
            tolerance: 0.0,
            passed: true,
            details: Value::Null,
            curve: Vec::new(),
        }
    }

    /// Pass iff `metric ≤ tolerance`.
    pub fn at_most(mut self, metric: f64, tolerance: f64) -> Self {
        self.metric = metric;
        self.tolerance = tolerance;
        self.passed = metric.is_finite() && metric <= tolerance;
        self
    }

    /// Pass iff `metric ≥ tolerance` (used for lower bounds).
    pub fn at_least(mut self, metric: f64, tolerance: f64) -> Self {
        self.metric = metric;
        self.tolerance = tolerance;
        self.passed = metric.is_finite() && metric >= tolerance;
        self
    }

    pub fn verdict(mut self, passed: bool) -> Self {
        self.passed = self.passed && passed;
        self
    }

    pub fn details(mut self, details: impl Serialize) -> Self {
        self.details = serde_json::to_value(details).unwrap_or(Value::Null);
        self
    }

    pub fn curve(mut self, taus: &[f64], residuals: &[f64]) -> Self {
        self.curve = taus
            .iter()
            .zip(residuals)
            .map(|(&tau, &residual)| CurvePoint { tau, residual })
            .collect();
        self
    }

    /// A failed record carrying an error message.
    pub fn failed(id: impl Into<String>, operation: impl Into<String>, inputs: Value, error: impl ToString) -> Self {
        let mut r = Self::new(id, operation, inputs);
        r.passed = false;
        r.metric = f64::NAN;
        r.details = serde_json::json!({ "error": error.to_string() });
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64, records: Vec<Record>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            passed: records.iter().all(|r| r.passed),
            records,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}: {}", self.tool, self.command, if self.passed { "PASS" } else { "FAIL" });
        for r in &self.records {
            let _ = writeln!(
                s,
                "  [{}] {:<40} metric {:>12.4e}  tol {:>10.3e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.id,
                r.metric,
                r.tolerance
            );
            if let Some(err) = r.details.get("error") {
                let _ = writeln!(s, "         {}", err.as_str().unwrap_or_default());
            }
            if !r.passed {
                if let Some(Value::String(text)) = r.details.get("summary") {
                    for line in text.split("; ") {
                        let _ = writeln!(s, "         {line}");
                    }
                }
            }
        }
        let failed = self.records.iter().filter(|r| !r.passed).count();
        let _ = writeln!(s, "{} checks, {} failed", self.records.len(), failed);
        s
    }

    pub fn curves_csv(&self) -> String {
        let mut s = String::from("tau,residual,check_id\n");
        for r in &self.records {
            for p in &r.curve {
                let _ = writeln!(s, "{:e},{:e},{}", p.tau, p.residual, r.id);
            }
        }
        s
    }
}

/// Writes `report.json`, `summary.txt` and `curves.csv` into `dir`.
pub fn emit_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ReportError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let files = [
        ("report.json", report.to_json()),
        ("summary.txt", report.summary()),
        ("curves.csv", report.curves_csv()),
    ];
    let mut out = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(io(&path))?;
        out.push(path);
    }
    Ok(out)
}
