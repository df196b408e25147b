//! Seeded experiments on random projections of convex bodies, with CSV/JSON reports and a
//! reproducible suite runner.

pub mod config;
pub mod harness;
pub mod report;
pub mod runners;

pub use config::{parse_config, parse_config_str, ConfigError, ExperimentConfig, ExperimentKind};
pub use harness::{run_suite, RunManifest, SuiteOptions};
pub use report::{Report, ReportStatus, Summary, Verdict};
pub use runners::run_experiment;
