//! Per-experiment reports: one CSV row per trial plus a JSON summary.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Pass,
    Fail,
    PreconditionFailed,
    InsufficientData,
    Error,
}

impl ReportStatus {
    pub fn is_fail(&self) -> bool {
        matches!(self, ReportStatus::Fail | ReportStatus::Error)
    }
}

impl fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportStatus::Pass => "PASS",
            ReportStatus::Fail => "FAIL",
            ReportStatus::PreconditionFailed => "PRECONDITION_FAILED",
            ReportStatus::InsufficientData => "INSUFFICIENT_DATA",
            ReportStatus::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    /// Human-readable form of the requirement, e.g. `≥ 0.9`.
    pub requirement: String,
}

impl Verdict {
    pub fn at_least(name: &str, observed: f64, bound: f64) -> Self {
        Verdict { name: name.into(), passed: observed >= bound, observed, requirement: format!(">= {bound}") }
    }

    pub fn at_most(name: &str, observed: f64, bound: f64) -> Self {
        Verdict { name: name.into(), passed: observed <= bound, observed, requirement: format!("<= {bound}") }
    }

    pub fn within(name: &str, observed: f64, lo: f64, hi: f64) -> Self {
        Verdict {
            name: name.into(),
            passed: observed >= lo && observed <= hi,
            observed,
            requirement: format!("in [{lo}, {hi}]"),
        }
    }

    pub fn check(name: &str, passed: bool, observed: f64, requirement: &str) -> Self {
        Verdict { name: name.into(), passed, observed, requirement: requirement.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub trial: usize,
    pub seed: u64,
    pub cells: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub kind: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub aggregates: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub status: ReportStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// JSON summary written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub id: String,
    pub kind: String,
    pub status: ReportStatus,
    pub config: ExperimentConfig,
    pub aggregates: BTreeMap<String, Value>,
    pub verdicts: Vec<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Report {
    pub fn new(cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Report {
            id: cfg.id().to_string(),
            kind: cfg.kind.name().to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            aggregates: BTreeMap::new(),
            verdicts: Vec::new(),
            status: ReportStatus::Pass,
            message: None,
        }
    }

    pub fn failed(cfg: &ExperimentConfig, message: String) -> Self {
        Report { status: ReportStatus::Error, message: Some(message), ..Report::new(cfg, &[]) }
    }

    pub fn push_row(&mut self, trial: usize, seed: u64, cells: Vec<Value>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(Row { trial, seed, cells });
    }

    pub fn aggregate(&mut self, name: &str, value: impl Into<Value>) {
        self.aggregates.insert(name.to_string(), value.into());
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    /// Pass iff every verdict passed, unless a precondition or data status was already set.
    pub fn finish(mut self) -> Self {
        if self.status == ReportStatus::Pass && self.verdicts.iter().any(|v| !v.passed) {
            self.status = ReportStatus::Fail;
        }
        self.rows.sort_by_key(|r| r.trial);
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Value>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r.cells[j]).collect())
    }

    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name).map(|v| v.iter().filter_map(|x| x.as_f64()).collect())
    }

    pub fn summary(&self, cfg: &ExperimentConfig) -> Summary {
        Summary {
            id: self.id.clone(),
            kind: self.kind.clone(),
            status: self.status,
            config: cfg.clone(),
            aggregates: self.aggregates.clone(),
            verdicts: self.verdicts.clone(),
            message: self.message.clone(),
        }
    }

    /// RFC 4180 CSV with columns `experiment,trial,seed,…`.
    pub fn to_csv(&self) -> csv::Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let mut header = vec!["experiment".to_string(), "trial".into(), "seed".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![self.id.clone(), row.trial.to_string(), row.seed.to_string()];
            record.extend(row.cells.iter().map(cell_text));
            w.write_record(&record)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<Vec<u8>> {
        let bytes = self.to_csv().map_err(std::io::Error::other)?;
        std::fs::write(path, &bytes)?;
        Ok(bytes)
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A JSON number, or null for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}
