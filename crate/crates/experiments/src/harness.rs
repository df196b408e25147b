//! Suite execution and persistence: one `<id>.csv` and `<id>.json` per experiment plus a
//! `manifest.json` recording SHA-256 digests of both.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::{Report, ReportStatus};
use crate::runners::run_experiment;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub kind: String,
    pub status: ReportStatus,
    pub csv: String,
    pub csv_sha256: String,
    pub summary: String,
    pub summary_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: Option<String>,
    /// Set when the seed was overridden for the whole suite.
    pub master_seed: Option<u64>,
    pub out_dir: String,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub experiments: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn any_failed(&self) -> bool {
        self.experiments.iter().any(|e| e.status.is_fail())
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub out_dir: PathBuf,
    /// Worker threads; 0 means the rayon default.
    pub parallelism: usize,
    pub config_path: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub trials_override: Option<usize>,
}

impl SuiteOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        SuiteOptions { out_dir: out_dir.into(), parallelism: 0, config_path: None, seed_override: None, trials_override: None }
    }
}

/// Applies the command-line seed and trial overrides.
pub fn apply_overrides(configs: &mut [ExperimentConfig], seed: Option<u64>, trials: Option<usize>) {
    for c in configs {
        if let Some(s) = seed {
            c.master_seed = s;
        }
        if let Some(t) = trials {
            c.trials = Some(t.max(1));
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs every experiment and writes the reports. Experiment failures are recorded in their
/// reports; only I/O problems abort the suite.
pub fn run_suite(
    configs: &[ExperimentConfig],
    base_dir: &Path,
    opts: &SuiteOptions,
) -> Result<(RunManifest, Vec<Report>), HarnessError> {
    let started_unix = unix_now();
    let mut configs = configs.to_vec();
    apply_overrides(&mut configs, opts.seed_override, opts.trials_override);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.parallelism).build()?;
    let reports: Vec<Report> = pool.install(|| configs.par_iter().map(|c| run_experiment(c, base_dir)).collect());

    fs::create_dir_all(&opts.out_dir).map_err(io_err(&opts.out_dir))?;
    let mut experiments = Vec::with_capacity(reports.len());
    for (cfg, report) in configs.iter().zip(&reports) {
        let csv_name = format!("{}.csv", report.id);
        let csv_path = opts.out_dir.join(&csv_name);
        let csv = report.write_csv(&csv_path).map_err(io_err(&csv_path))?;
        let summary_name = format!("{}.json", report.id);
        let summary_path = opts.out_dir.join(&summary_name);
        let mut summary = serde_json::to_vec_pretty(&report.summary(cfg))
            .map_err(|source| HarnessError::Json { path: summary_path.clone(), source })?;
        summary.push(b'\n');
        fs::write(&summary_path, &summary).map_err(io_err(&summary_path))?;
        experiments.push(ManifestEntry {
            id: report.id.clone(),
            kind: report.kind.clone(),
            status: report.status,
            csv: csv_name,
            csv_sha256: sha256_hex(&csv),
            summary: summary_name,
            summary_sha256: sha256_hex(&summary),
        });
    }
    let manifest = RunManifest {
        config_path: opts.config_path.as_ref().map(|p| p.display().to_string()),
        master_seed: opts.seed_override,
        out_dir: opts.out_dir.display().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        finished_unix: unix_now(),
        experiments,
    };
    let path = opts.out_dir.join(MANIFEST_FILE);
    let mut bytes =
        serde_json::to_vec_pretty(&manifest).map_err(|source| HarnessError::Json { path: path.clone(), source })?;
    bytes.push(b'\n');
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok((manifest, reports))
}

pub fn load_manifest(out_dir: &Path) -> Result<RunManifest, HarnessError> {
    let path = out_dir.join(MANIFEST_FILE);
    let text = fs::read(&path).map_err(io_err(&path))?;
    serde_json::from_slice(&text).map_err(|source| HarnessError::Json { path, source })
}

/// Files whose current digest differs from the manifest, or that are missing.
pub fn verify_manifest(out_dir: &Path, manifest: &RunManifest) -> Vec<String> {
    let mut bad = Vec::new();
    for e in &manifest.experiments {
        for (name, digest) in [(&e.csv, &e.csv_sha256), (&e.summary, &e.summary_sha256)] {
            match fs::read(out_dir.join(name)) {
                Ok(bytes) if sha256_hex(&bytes) == *digest => {}
                _ => bad.push(name.clone()),
            }
        }
    }
    bad
}

/// One line per experiment: status, id, kind and any failed verdicts.
pub fn summarize(out_dir: &Path) -> Result<(String, RunManifest), HarnessError> {
    let manifest = load_manifest(out_dir)?;
    let mut text = String::new();
    for e in &manifest.experiments {
        let path = out_dir.join(&e.summary);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let summary: crate::report::Summary =
            serde_json::from_slice(&bytes).map_err(|source| HarnessError::Json { path, source })?;
        text.push_str(&format!("{:<20} {:<24} {}", e.status.to_string(), e.id, e.kind));
        for v in summary.verdicts.iter().filter(|v| !v.passed) {
            text.push_str(&format!("  [{}: {} not {}]", v.name, v.observed, v.requirement));
        }
        if let Some(m) = &summary.message {
            text.push_str(&format!("  ({m})"));
        }
        text.push('\n');
    }
    for name in verify_manifest(out_dir, &manifest) {
        text.push_str(&format!("digest mismatch: {name}\n"));
    }
    Ok((text, manifest))
}
