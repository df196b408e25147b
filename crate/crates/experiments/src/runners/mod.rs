//! One runner per experiment kind. Trials run in parallel on derived seeds and are collected
//! in trial order, so reports do not depend on the thread count.

use std::path::Path;

use dvolab_core::inclusion::InclusionOptions;
use dvolab_core::linalg::median;
use dvolab_core::rng::{derive_seed, label_hash};
use dvolab_core::widths::{empirical_diameter, projected_width};
use dvolab_core::{ConvexBody, Error, Result, SampleMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::report::Report;

pub mod b1_intersection;
pub mod bernstein;
pub mod cotype;
pub mod dvoretzky;
pub mod jl;
pub mod lprt;
pub mod rearrangement;
pub mod theorem_a;
pub mod two_stage;

/// Runs one experiment. Errors end up in the report with status `error`.
pub fn run_experiment(cfg: &ExperimentConfig, base_dir: &Path) -> Report {
    let result = match cfg.kind {
        ExperimentKind::GaussianDvoretzky => dvoretzky::run(cfg, base_dir),
        ExperimentKind::TheoremA => theorem_a::run(cfg, base_dir),
        ExperimentKind::Cotype => cotype::run(cfg, base_dir),
        ExperimentKind::B1Intersection => b1_intersection::run(cfg),
        ExperimentKind::TwoStage => two_stage::run(cfg, base_dir),
        ExperimentKind::Jl => jl::run(cfg),
        ExperimentKind::BernsteinTails => bernstein::run(cfg),
        ExperimentKind::Rearrangement => rearrangement::run(cfg, base_dir),
        ExperimentKind::Lprt => lprt::run(cfg),
    };
    match result {
        Ok(report) => report.finish(),
        Err(e) => Report::failed(cfg, e.to_string()),
    }
}

/// Seed of trial `trial`, derived from the master seed and the experiment id.
pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    derive_seed(cfg.master_seed, &[label_hash(cfg.id()), trial as u64])
}

/// Seed for a named auxiliary quantity (a width estimate, a point set, ...).
pub fn aux_seed(cfg: &ExperimentConfig, label: &str) -> u64 {
    derive_seed(cfg.master_seed, &[label_hash(cfg.id()), u64::MAX, label_hash(label)])
}

/// Runs `f(trial, seed)` for trials `first..first + count` in parallel, in trial order.
pub(crate) fn par_trials<T, F>(cfg: &ExperimentConfig, first: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    (first..first + count).into_par_iter().map(|t| f(t, trial_seed(cfg, t))).collect()
}

pub(crate) fn body(cfg: &ExperimentConfig, base_dir: &Path) -> Result<ConvexBody> {
    cfg.body.as_ref().ok_or_else(|| Error::Config(format!("{}: no body", cfg.id())))?.build(base_dir)
}

pub(crate) fn req<T: Copy>(value: Option<T>, name: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing `{name}`")))
}

pub(crate) fn search_options(cfg: &ExperimentConfig, seed: u64) -> InclusionOptions {
    let defaults = InclusionOptions::default();
    InclusionOptions {
        restarts: cfg.restarts.unwrap_or(defaults.restarts),
        iterations: cfg.iterations.unwrap_or(defaults.iterations),
        seed,
        ..defaults
    }
}

pub(crate) fn frequency(flags: &[bool]) -> f64 {
    if flags.is_empty() {
        return 0.0;
    }
    flags.iter().filter(|f| **f).count() as f64 / flags.len() as f64
}

pub(crate) fn median_of(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        median(values)
    }
}

/// max/min of positive values, infinite if some value is not positive.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// The good-sample event: a controlled empirical diameter and a large projected width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventAResult {
    /// Empirical diameter over `ℓ* + d√N`.
    pub cond1_ratio: f64,
    /// `ℓ*(ΓT)/(√N·ℓ*)`.
    pub cond2_ratio: f64,
    pub in_event: bool,
}

/// Evaluates both conditions for one sample. `width` and `radius` are `ℓ*(T)` and `d_T`.
#[allow(clippy::too_many_arguments)]
pub fn event_a(
    body: &ConvexBody,
    gamma: &SampleMatrix,
    width: f64,
    radius: f64,
    u: f64,
    delta: f64,
    mc_samples: usize,
    restarts: usize,
) -> Result<EventAResult> {
    let n_rows = gamma.rows() as f64;
    let diameter = empirical_diameter(body, gamma, restarts)?.value;
    let projected = projected_width(body, gamma, mc_samples, derive_seed(gamma.seed(), &[label_hash("projected")]))?;
    let cond1_ratio = diameter / (width + radius * n_rows.sqrt());
    let cond2_ratio = projected.mean / (n_rows.sqrt() * width);
    Ok(EventAResult { cond1_ratio, cond2_ratio, in_event: cond1_ratio <= u && cond2_ratio >= delta })
}
