//! Pairwise distance preservation `½ ≤ ‖Γ(t₁−t₂)‖²/(N‖t₁−t₂‖²) ≤ 3/2` on a finite set.

use dvolab_core::linalg::mean_and_std_error;
use dvolab_core::rng::{random_unit, stream_rng};
use dvolab_core::{sample_matrix, Error, Matrix, Result, Vector};
use serde_json::json;

use super::{aux_seed, frequency, par_trials, req};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, Verdict};

pub const LOWER: f64 = 0.5;
pub const UPPER: f64 = 1.5;

/// `‖Γ(tᵢ−tⱼ)‖²/(N‖tᵢ−tⱼ‖²)` for every pair `i < j` with distinct points.
pub fn pair_ratios(gamma: &Matrix, points: &[Vector]) -> Vec<f64> {
    let n_rows = gamma.nrows() as f64;
    let images: Vec<Vector> = points.iter().map(|p| gamma * p).collect();
    let mut ratios = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (&points[i] - &points[j]).norm_squared();
            if d > 0.0 {
                ratios.push((&images[i] - &images[j]).norm_squared() / (n_rows * d));
            }
        }
    }
    ratios
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let n = req(cfg.n, "n")?;
    let n_rows = req(cfg.big_n, "N")?;
    let count = req(cfg.points, "points")?;
    if count < 2 {
        return Err(Error::Config("jl needs at least two points".into()));
    }
    let mut rng = stream_rng(aux_seed(cfg, "points"), 0);
    let points: Vec<Vector> = (0..count).map(|_| random_unit(&mut rng, n)).collect();
    let law = cfg.law();

    let rows = par_trials(cfg, 0, cfg.trials(), |trial, seed| {
        let gamma = sample_matrix(law, n_rows, n, seed)?;
        let ratios = pair_ratios(gamma.matrix(), &points);
        Ok((trial, seed, ratios))
    })?;

    let mut report = Report::new(cfg, &["N", "pairs", "min_ratio", "max_ratio", "mean_ratio", "spread", "all_in_range"]);
    let mut passes = Vec::new();
    let mut means = Vec::new();
    let mut spreads = Vec::new();
    for (trial, seed, ratios) in rows {
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mean, se) = mean_and_std_error(&ratios);
        let sd = se * (ratios.len() as f64).sqrt();
        let ok = lo >= LOWER && hi <= UPPER;
        passes.push(ok);
        means.push(mean);
        spreads.push(sd);
        report.push_row(
            trial,
            seed,
            vec![json!(n_rows), json!(ratios.len()), num(lo), num(hi), num(mean), num(sd), json!(ok)],
        );
    }
    let freq = frequency(&passes);
    let (mean_ratio, mean_se) = mean_and_std_error(&means);
    report.aggregate("all_pairs_frequency", num(freq));
    report.aggregate("mean_ratio", num(mean_ratio));
    report.aggregate("mean_ratio_std_error", num(mean_se));
    report.aggregate("mean_spread", num(mean_and_std_error(&spreads).0));
    report.verdict(Verdict::at_least("all_pairs_frequency", freq, req(cfg.threshold, "threshold")?));
    Ok(report)
}
