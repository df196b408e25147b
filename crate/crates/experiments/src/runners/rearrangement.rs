//! The top-`k` statistic `sup_{t∈T} (Σ_{i≤k} ((Γt)*ᵢ)²)^{1/2}` against its scale
//! `ℓ* + d_T√(k·ln(eN/(kε)))`.

use std::path::Path;

use dvolab_core::rng::{random_unit, stream_rng};
use dvolab_core::widths::{empirical_diameter, mean_width, rearrangement_stat};
use dvolab_core::{sample_matrix, ConvexBody, Matrix, Result};
use serde_json::json;

use super::{aux_seed, median_of, par_trials, req, spread};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, Verdict};

/// Labels of the four `k` values `1, N/4, N/2, N`.
pub const K_LABELS: [&str; 4] = ["k1", "quarter", "half", "full"];

pub fn k_values(n_rows: usize) -> [usize; 4] {
    [1, (n_rows / 4).max(1), (n_rows / 2).max(1), n_rows]
}

/// `ℓ* + d√(k·ln(eN/(kε)))`.
pub fn scale(width: f64, radius: f64, k: usize, n_rows: usize, eps: f64) -> f64 {
    let kf = k as f64;
    width + radius * (kf * (std::f64::consts::E * n_rows as f64 / (kf * eps)).ln()).sqrt()
}

/// `conv(±v_j)` for `count` uniform unit vectors in `Rⁿ`.
pub fn random_polytope(n: usize, count: usize, seed: u64) -> Result<ConvexBody> {
    let mut rng = stream_rng(seed, 0);
    let mut vertices = Matrix::zeros(count, n);
    for j in 0..count {
        vertices.set_row(j, &random_unit(&mut rng, n).transpose());
    }
    ConvexBody::polytope(vertices)
}

pub fn run(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Report> {
    let t = match &cfg.body {
        Some(d) => d.build(base_dir)?,
        None => random_polytope(req(cfg.n, "n")?, req(cfg.vertices, "vertices")?, aux_seed(cfg, "polytope"))?,
    };
    let law = cfg.law();
    let eps = req(cfg.eps, "eps")?;
    let restarts = req(cfg.restarts, "restarts")?;
    let width = mean_width(&t, req(cfg.mc_samples, "mc_samples")?, aux_seed(cfg, "width"))?;
    let radius = t.euclidean_radius().value;
    let sizes = match &cfg.n_grid {
        Some(g) => g.clone(),
        None => vec![req(cfg.big_n, "N")?],
    };
    let trials = cfg.trials();

    let mut columns = vec!["N".to_string()];
    columns.extend(K_LABELS.iter().map(|l| format!("stat_{l}")));
    columns.extend(K_LABELS.iter().map(|l| format!("ratio_{l}")));
    columns.extend(["diameter".to_string(), "exact".to_string(), "diameter_match".to_string()]);
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut report = Report::new(cfg, &column_refs);
    report.aggregate("ell_star", num(width.mean));
    report.aggregate("radius", num(radius));

    let mut medians = Vec::new();
    let mut all_ratios = Vec::new();
    let mut matches = true;
    for (j, &n_rows) in sizes.iter().enumerate() {
        let ks = k_values(n_rows);
        let rows = par_trials(cfg, j * trials, trials, |trial, seed| {
            let gamma = sample_matrix(law, n_rows, t.dim(), seed)?;
            let stats = ks.iter().map(|&k| rearrangement_stat(&t, &gamma, k, restarts)).collect::<Result<Vec<_>>>()?;
            let diameter = empirical_diameter(&t, &gamma, restarts)?;
            Ok((trial, seed, stats, diameter))
        })?;
        let mut per_k: Vec<Vec<f64>> = vec![Vec::new(); ks.len()];
        for (trial, seed, stats, diameter) in rows {
            let ratios: Vec<f64> =
                stats.iter().zip(ks).map(|(s, k)| s.value / scale(width.mean, radius, k, n_rows, eps)).collect();
            let full = stats[ks.len() - 1].value;
            let matched = full == diameter.value;
            matches &= matched;
            let mut cells = vec![json!(n_rows)];
            cells.extend(stats.iter().map(|s| num(s.value)));
            cells.extend(ratios.iter().map(|r| num(*r)));
            cells.extend([num(diameter.value), json!(stats.iter().all(|s| s.exact)), json!(matched)]);
            report.push_row(trial, seed, cells);
            for (i, r) in ratios.into_iter().enumerate() {
                per_k[i].push(r);
                all_ratios.push(r);
            }
        }
        for (label, values) in K_LABELS.iter().zip(&per_k) {
            let med = median_of(values);
            report.aggregate(&format!("N{n_rows}/{label}/median_ratio"), num(med));
            medians.push(med);
        }
    }

    // The smallest case (first N, k = 1) fixes the constant.
    let constant = medians[0];
    let worst = all_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max) / constant;
    let factor = req(cfg.threshold, "threshold")?;
    report.aggregate("calibrated_constant", num(constant));
    report.aggregate("median_spread", num(spread(&medians)));
    report.verdict(Verdict::at_most("median_spread", spread(&medians), factor));
    report.verdict(Verdict::at_most("max_ratio_over_constant", worst, factor));
    report.verdict(Verdict::check("full_k_matches_diameter", matches, f64::from(u8::from(matches)), "exact match"));
    Ok(report)
}
