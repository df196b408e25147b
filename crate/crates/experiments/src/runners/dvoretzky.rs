//! Two-sided gaussian Dvoretzky sandwich `(1−ε)ℓ*B₂ᴺ ⊂ ΓT ⊂ (1+ε)ℓ*B₂ᴺ` with exact
//! singular-value certificates.

use std::path::Path;

use dvolab_core::ensembles::project_body;
use dvolab_core::inclusion::{dvoretzky_certificate, InclusionOptions};
use dvolab_core::widths::{critical_dimension, eps_critical_dimension, mean_width};
use dvolab_core::{sample_matrix, Result, ScalarLaw};
use serde_json::json;

use super::{aux_seed, body, frequency, par_trials, req};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, Verdict};

pub fn run(cfg: &ExperimentConfig, base_dir: &Path) -> Result<Report> {
    let t = body(cfg, base_dir)?;
    let eps = req(cfg.eps, "eps")?;
    let trials = cfg.trials();
    let width = mean_width(&t, req(cfg.mc_samples, "mc_samples")?, aux_seed(cfg, "width"))?;
    let radius = t.euclidean_radius().value;
    let k_star = critical_dimension(&t, &width)?;
    let k_eps = eps_critical_dimension(k_star, eps)?;
    let n_rows = match cfg.big_n {
        Some(n) => n,
        None => ((req(cfg.c, "c")? * k_eps).round() as usize).max(1),
    };
    let rho_in = (1.0 - eps) * width.mean;
    let r_out = (1.0 + eps) * width.mean;
    let opts = InclusionOptions::default();

    let rows = par_trials(cfg, 0, trials, |trial, seed| {
        let gamma = sample_matrix(ScalarLaw::Gaussian, n_rows, t.dim(), seed)?;
        let image = project_body(&t, &gamma)?;
        let (inner, outer) = dvoretzky_certificate(&image, rho_in, r_out, &opts)?;
        let pass = inner.is_verified() && outer.is_verified();
        Ok((trial, seed, inner, outer, pass))
    })?;

    let mut report = Report::new(
        cfg,
        &["N", "inner_margin", "outer_margin", "inner_status", "outer_status", "sigma_min", "sigma_max", "pass"],
    );
    let mut passes = Vec::with_capacity(trials);
    for (trial, seed, inner, outer, pass) in rows {
        passes.push(pass);
        report.push_row(
            trial,
            seed,
            vec![
                json!(n_rows),
                num(inner.margin),
                num(outer.margin),
                json!(inner.status),
                json!(outer.status),
                num(rho_in + inner.margin),
                num(r_out - outer.margin),
                json!(pass),
            ],
        );
    }
    let freq = frequency(&passes);
    report.aggregate("ell_star", num(width.mean));
    report.aggregate("ell_star_std_error", num(width.std_error));
    report.aggregate("radius", num(radius));
    report.aggregate("k_star", num(k_star));
    report.aggregate("k_star_eps", num(k_eps));
    report.aggregate("N", n_rows);
    report.aggregate("rho_in", num(rho_in));
    report.aggregate("r_out", num(r_out));
    report.aggregate("pass_frequency", num(freq));
    report.verdict(Verdict::at_least("sandwich_frequency", freq, req(cfg.threshold, "threshold")?));
    Ok(report)
}
