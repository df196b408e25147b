//! Bernstein tails for `f = ξ² − 1`: `P(|N⁻¹Σf(Xᵢ)| ≥ u‖f‖ψ₁) ≤ 2exp(−c₁N·min(u², u))`.

use dvolab_core::ensembles::psi_alpha_estimate;
use dvolab_core::rng::{derive_seed, stream_rng};
use dvolab_core::{Error, Result, ScalarLaw};
use rayon::prelude::*;
use serde_json::json;

use super::{aux_seed, req};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, ReportStatus, Verdict};

/// Fewer uncensored cells than this leave the rate unfitted.
pub const MIN_FIT_CELLS: usize = 4;
/// Monotonicity may be violated by at most this many standard errors.
pub const MONOTONE_SLACK: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCell {
    pub n: usize,
    pub u: f64,
    pub exceedances: usize,
    pub trials: usize,
}

impl TailCell {
    pub fn probability(&self) -> f64 {
        self.exceedances as f64 / self.trials as f64
    }

    pub fn std_error(&self) -> f64 {
        let p = self.probability();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// No exceedance observed; only `p < 1/trials` is known.
    pub fn censored(&self) -> bool {
        self.exceedances == 0
    }
}

/// `|N⁻¹Σ(ξᵢ² − 1)|` for each trial. Trial `t` reads stream `t` of `seed`, so sample means for
/// different `N` share their leading draws.
pub fn sample_means(law: ScalarLaw, n: usize, trials: usize, seed: u64) -> Vec<f64> {
    (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let s: f64 = (0..n).map(|_| law.sample(&mut rng).powi(2) - 1.0).sum();
            (s / n as f64).abs()
        })
        .collect()
}

/// Least-squares slope through the origin of `ln 2 − ln p̂` against `N·min(u², u)`, over the
/// uncensored cells with positive abscissa. `None` when fewer than [`MIN_FIT_CELLS`] remain.
pub fn fit_rate(cells: &[TailCell]) -> Option<(f64, usize)> {
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut used = 0;
    for c in cells.iter().filter(|c| !c.censored()) {
        let x = c.n as f64 * (c.u * c.u).min(c.u);
        if x <= 0.0 {
            continue;
        }
        let y = std::f64::consts::LN_2 - c.probability().ln();
        sxy += x * y;
        sxx += x * x;
        used += 1;
    }
    (used >= MIN_FIT_CELLS).then(|| (sxy / sxx, used))
}

/// Worst excess of a later cell over an earlier one, in standard errors, along `cells`.
fn monotone_excess(cells: &[&TailCell]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for w in cells.windows(2) {
        let (a, b) = (w[0], w[1]);
        let se = (a.std_error().powi(2) + b.std_error().powi(2)).sqrt().max(1.0 / a.trials as f64);
        worst = worst.max((b.probability() - a.probability()) / se);
    }
    worst
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let law = cfg.law();
    let mut u_grid = cfg.u_grid.clone().ok_or_else(|| Error::Config("missing `u_grid`".into()))?;
    let mut n_grid = cfg.n_grid.clone().ok_or_else(|| Error::Config("missing `n_grid`".into()))?;
    u_grid.sort_by(f64::total_cmp);
    n_grid.sort_unstable();
    let trials = cfg.trials();
    let mc = req(cfg.mc_samples, "mc_samples")?;

    let mut rng = stream_rng(aux_seed(cfg, "psi1"), 0);
    let f_sample: Vec<f64> = (0..mc).map(|_| law.sample(&mut rng).powi(2) - 1.0).collect();
    let psi1 = psi_alpha_estimate(&f_sample, 1.0)?;

    let shared = aux_seed(cfg, "means");
    let mut cells = Vec::new();
    let mut report =
        Report::new(cfg, &["N", "u", "threshold", "exceedances", "probability", "std_error", "censored"]);
    for &n in &n_grid {
        let means = sample_means(law, n, trials, shared);
        for &u in &u_grid {
            let level = u * psi1;
            let exceedances = means.iter().filter(|m| **m >= level).count();
            let cell = TailCell { n, u, exceedances, trials };
            report.push_row(
                cells.len(),
                derive_seed(shared, &[n as u64]),
                vec![
                    json!(n),
                    num(u),
                    num(level),
                    json!(exceedances),
                    num(cell.probability()),
                    num(cell.std_error()),
                    json!(cell.censored()),
                ],
            );
            cells.push(cell);
        }
    }
    report.aggregate("psi1", num(psi1));
    report.aggregate("censored_cells", cells.iter().filter(|c| c.censored()).count());

    match fit_rate(&cells) {
        Some((c1, used)) => {
            report.aggregate("c1", num(c1));
            report.aggregate("fit_cells", used);
            report.verdict(Verdict::check("c1_positive", c1 > 0.0, c1, "> 0"));
        }
        None => {
            report.aggregate("c1", json!(null));
            report.status = ReportStatus::InsufficientData;
            report.message = Some(format!("fewer than {MIN_FIT_CELLS} uncensored cells"));
        }
    }
    if let Some(cell) = cells.iter().find(|c| c.u == 1.0 && c.n == 800) {
        report.verdict(Verdict::at_most("exceedance_u1_n800", cell.probability(), req(cfg.threshold, "threshold")?));
    }
    let mut worst_n = f64::NEG_INFINITY;
    for &u in &u_grid {
        let along: Vec<&TailCell> = cells.iter().filter(|c| c.u == u).collect();
        worst_n = worst_n.max(monotone_excess(&along));
    }
    let mut worst_u = f64::NEG_INFINITY;
    for &n in &n_grid {
        let along: Vec<&TailCell> = cells.iter().filter(|c| c.n == n).collect();
        worst_u = worst_u.max(monotone_excess(&along));
    }
    if worst_n.is_finite() {
        report.verdict(Verdict::at_most("monotone_in_N", worst_n, MONOTONE_SLACK));
    }
    if worst_u.is_finite() {
        report.verdict(Verdict::at_most("monotone_in_u", worst_u, MONOTONE_SLACK));
    }
    Ok(report)
}
