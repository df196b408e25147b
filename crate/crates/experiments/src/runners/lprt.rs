//! Cubes in random polytopes: `c√(ln(en/k)/k)·B∞ᵏ ⊂ ΓB₁ⁿ` for a `k×n` subgaussian `Γ`.

use dvolab_core::ensembles::project_body;
use dvolab_core::inclusion::{cube_in_body, max_cube_side};
use dvolab_core::rng::derive_seed;
use dvolab_core::selection::rho_k;
use dvolab_core::{sample_matrix, ConvexBody, Error, Result};
use serde_json::json;

use super::{frequency, median_of, par_trials, req, search_options};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, Verdict};

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let cells = cfg.cells.clone().ok_or_else(|| Error::Config("missing `cells`".into()))?;
    let law = cfg.law();
    let c = req(cfg.c, "c")?;
    let threshold = req(cfg.threshold, "threshold")?;
    let trials = cfg.trials();
    let mut report = Report::new(cfg, &["n", "k", "cube_side", "normalized_side", "radius", "status", "margin"]);

    let mut calibrated: Option<f64> = None;
    for (j, &(n, k)) in cells.iter().enumerate() {
        if k == 0 || k > n {
            return Err(Error::Config(format!("cell ({n}, {k}) needs 1 ≤ k ≤ n")));
        }
        let tag = format!("{n}x{k}");
        let scale = rho_k(n, k);
        let base = ConvexBody::l1_ball(n, 1.0)?;
        let sides = par_trials(cfg, j * trials, trials, |trial, seed| {
            let gamma = sample_matrix(law, k, n, seed)?;
            let image = project_body(&base, &gamma)?;
            let side = max_cube_side(&image, &search_options(cfg, derive_seed(seed, &[1])))?;
            Ok((trial, seed, image, side.value))
        })?;
        let normalized: Vec<f64> = sides.iter().map(|s| s.3 / scale).collect();
        let med = median_of(&normalized);
        // The first cell's median fixes the constant for every cell.
        let constant = *calibrated.get_or_insert(c * med);
        let r = constant * scale;
        let mut clean = Vec::with_capacity(trials);
        for ((trial, seed, image, side), norm) in sides.into_iter().zip(normalized) {
            let cert = cube_in_body(&image, r, &search_options(cfg, derive_seed(seed, &[2])))?;
            clean.push(!cert.is_refuted());
            report.push_row(
                trial,
                seed,
                vec![json!(n), json!(k), num(side), num(norm), num(r), json!(cert.status), num(cert.margin)],
            );
        }
        let freq = frequency(&clean);
        report.aggregate(&format!("{tag}/normalized_side_median"), num(med));
        report.aggregate(&format!("{tag}/no_refutation_frequency"), num(freq));
        report.verdict(Verdict::at_least(&format!("{tag}/no_refutation_frequency"), freq, threshold));
    }
    report.aggregate("calibrated_constant", num(calibrated.unwrap_or(f64::NAN)));
    Ok(report)
}
