//! Cube extraction from a single random projection: on the good-sample event, some coordinate
//! set `I` of size ∼ k* gives `c₄ℓ*/√|I|·B∞ᴵ ⊂ Q_I(ΓT) ⊂ c₅ℓ*·B₂ᴵ`.

use std::path::Path;

use dvolab_core::ensembles::project_body;
use dvolab_core::rng::derive_seed;
use dvolab_core::selection::subset_cube_search;
use dvolab_core::sphere::SphereSearch;
use dvolab_core::widths::{critical_dimension, mean_width, oscillation};
use dvolab_core::{sample_matrix, ConvexBody, Result, SampleMatrix};
use serde_json::json;

use super::{aux_seed, body, event_a, frequency, median_of, par_trials, req, search_options, EventAResult};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, ReportStatus, Verdict};

/// Calibrated constants may move by at most this factor away from trial 0.
pub const CALIBRATION_FACTOR: f64 = 3.0;

/// One stage-1 extraction: `I`, the cube side of `Q_I V` and the Euclidean radius of `Q_I V`.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub indices: Vec<usize>,
    pub cube_side: f64,
    pub radius: f64,
    pub restricted: ConvexBody,
}

/// Runs the subset search on `ΓT` down to `target` coordinates and measures the result.
pub fn extract(
    body: &ConvexBody,
    gamma: &SampleMatrix,
    target: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Extraction> {
    let image = project_body(body, gamma)?;
    let opts = search_options(cfg, derive_seed(seed, &[1]));
    let found = subset_cube_search(&image, target.clamp(1, gamma.rows()), cfg.budget.unwrap_or(1), seed, &opts)?;
    let restricted = image.restrict_coordinates(&found.indices)?;
    let search = SphereSearch {
        restarts: cfg.restarts.unwrap_or(64).max(1),
        iterations: cfg.iterations.unwrap_or(500),
        ..SphereSearch::sup_default(derive_seed(seed, &[2]))
    };
    let radius = restricted.euclidean_radius_with(&search).value;
    Ok(Extraction { indices: found.indices, cube_side: found.cube_side, radius, restricted })
}

pub fn run(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Report> {
    let t = body(cfg, base_dir)?;
    let law = cfg.law();
    let mc = req(cfg.mc_samples, "mc_samples")?;
    let (u, delta) = (req(cfg.u, "u")?, req(cfg.delta, "delta")?);
    let alpha = req(cfg.alpha, "alpha")?;
    let width = mean_width(&t, mc, aux_seed(cfg, "width"))?;
    let radius = t.euclidean_radius().value;
    let k_star = critical_dimension(&t, &width)?;

    let mut report = Report::new(
        cfg,
        &[
            "N",
            "size",
            "cube_side",
            "inner_ratio",
            "outer_ratio",
            "cond1_ratio",
            "cond2_ratio",
            "in_event",
            "inner_refuted",
            "outer_refuted",
        ],
    );
    report.aggregate("ell_star", num(width.mean));
    report.aggregate("ell_star_std_error", num(width.std_error));
    report.aggregate("radius", num(radius));
    report.aggregate("k_star", num(k_star));

    let phi = oscillation(&t, alpha * radius, mc, aux_seed(cfg, "oscillation"))?;
    report.aggregate("oscillation", num(phi.mean));
    let precondition = Verdict::at_most("oscillation_precondition", phi.mean, width.mean / 4.0);
    if !precondition.passed {
        report.verdict(precondition);
        report.status = ReportStatus::PreconditionFailed;
        report.message = Some(format!("phi(alpha·d) = {:.4} exceeds ell*/4 = {:.4}", phi.mean, width.mean / 4.0));
        return Ok(report);
    }
    report.verdict(precondition);

    let n_rows = match cfg.big_n {
        Some(n) => n,
        None => ((req(cfg.c, "c")? * k_star).round() as usize).max(1),
    };
    let target = ((req(cfg.c3, "c3")? * k_star).round() as usize).clamp(1, n_rows);
    report.aggregate("N", n_rows);
    report.aggregate("target_size", target);
    let restarts = cfg.restarts.unwrap_or(64);

    let rows = par_trials(cfg, 0, cfg.trials(), |trial, seed| {
        let gamma = sample_matrix(law, n_rows, t.dim(), seed)?;
        let event: EventAResult = event_a(&t, &gamma, width.mean, radius, u, delta, mc, restarts)?;
        let ex = extract(&t, &gamma, target, cfg, seed)?;
        Ok((trial, seed, event, ex))
    })?;

    let inner: Vec<f64> =
        rows.iter().map(|(_, _, _, ex)| ex.cube_side * (ex.indices.len() as f64).sqrt() / width.mean).collect();
    let outer: Vec<f64> = rows.iter().map(|(_, _, _, ex)| ex.radius / width.mean).collect();
    // Trial 0 fixes c₄ and c₅; every trial is then judged against them.
    let c4 = inner[0] / CALIBRATION_FACTOR;
    let c5 = outer[0] * CALIBRATION_FACTOR;
    let mut clean = Vec::new();
    let mut events = Vec::new();
    for (i, (trial, seed, event, ex)) in rows.into_iter().enumerate() {
        // Both values are attained at explicit witnesses, so crossing a constant is a refutation.
        let inner_refuted = inner[i] < c4;
        let outer_refuted = outer[i] > c5;
        clean.push(!inner_refuted && !outer_refuted);
        events.push(event.in_event);
        report.push_row(
            trial,
            seed,
            vec![
                json!(n_rows),
                json!(ex.indices.len()),
                num(ex.cube_side),
                num(inner[i]),
                num(outer[i]),
                num(event.cond1_ratio),
                num(event.cond2_ratio),
                json!(event.in_event),
                json!(inner_refuted),
                json!(outer_refuted),
            ],
        );
    }
    let stability = inner.iter().map(|r| (r / inner[0]).max(inner[0] / r)).fold(1.0, f64::max);
    let freq = frequency(&clean);
    report.aggregate("c4", num(c4));
    report.aggregate("c5", num(c5));
    report.aggregate("inner_median", num(median_of(&inner)));
    report.aggregate("outer_median", num(median_of(&outer)));
    report.aggregate("event_frequency", num(frequency(&events)));
    report.aggregate("no_refutation_frequency", num(freq));
    report.verdict(Verdict::at_most("inner_stability", stability, CALIBRATION_FACTOR));
    report.verdict(Verdict::at_least("no_refutation_frequency", freq, req(cfg.threshold, "threshold")?));
    Ok(report)
}
