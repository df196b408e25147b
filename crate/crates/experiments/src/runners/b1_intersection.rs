//! `B₁ⁿ ∩ ρ_kB₂ⁿ`: its width `∼ √(ln(enρ_k²))`, the separated polytope `W_k` inside it, and
//! the cube side `∼ √(ln(en/k)/k)` extracted from `Γ(B₁ⁿ ∩ ρ_kB₂ⁿ)` with `N ∼ k`.

use dvolab_core::ensembles::project_body;
use dvolab_core::rng::derive_seed;
use dvolab_core::selection::{rho_k, subset_cube_search, wk_vertices};
use dvolab_core::widths::mean_width;
use dvolab_core::{sample_matrix, ConvexBody, Error, Result, Vector};
use serde_json::json;

use super::{aux_seed, median_of, par_trials, req, search_options, spread};
use crate::config::ExperimentConfig;
use crate::report::{num, Report, Verdict};

pub const WIDTH_BAND: (f64, f64) = (0.3, 3.0);
pub const STABILITY_FACTOR: f64 = 3.0;
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// `√(ln(enρ²))`.
pub fn width_scale(n: usize, rho: f64) -> f64 {
    (std::f64::consts::E * n as f64 * rho * rho).ln().sqrt()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let cells = cfg.cells.clone().ok_or_else(|| Error::Config("missing `cells`".into()))?;
    let law = cfg.law();
    let mc = req(cfg.mc_samples, "mc_samples")?;
    let (c, c3) = (req(cfg.c, "c")?, req(cfg.c3, "c3")?);
    let trials = cfg.trials();
    let mut report = Report::new(cfg, &["n", "k", "N", "size", "cube_side", "normalized_side"]);
    let mut medians = Vec::new();

    for (j, &(n, k)) in cells.iter().enumerate() {
        if k == 0 || k > n {
            return Err(Error::Config(format!("cell ({n}, {k}) needs 1 ≤ k ≤ n")));
        }
        let tag = format!("{n}x{k}");
        let rho = rho_k(n, k);
        let body = ConvexBody::intersection_l1_l2(n, rho)?;
        let width = mean_width(&body, mc, aux_seed(cfg, &format!("width/{tag}")))?;
        let scale = width_scale(n, rho);
        let width_ratio = width.mean / scale;
        report.aggregate(&format!("{tag}/rho_k"), num(rho));
        report.aggregate(&format!("{tag}/ell_star"), num(width.mean));
        report.aggregate(&format!("{tag}/width_ratio"), num(width_ratio));
        report.verdict(Verdict::within(&format!("{tag}/width_ratio"), width_ratio, WIDTH_BAND.0, WIDTH_BAND.1));

        let wk = wk_vertices(n, k, None, aux_seed(cfg, &format!("wk/{tag}")))?;
        let vertices = match wk.body.kind() {
            dvolab_core::BodyKind::SymmetricPolytope { vertices } => vertices.clone(),
            _ => unreachable!("W_k is a polytope"),
        };
        let mut inside = 0usize;
        for row in vertices.row_iter() {
            let v: Vector = row.transpose();
            if body.membership(&v, MEMBERSHIP_TOL)?.is_inside() {
                inside += 1;
            }
        }
        let wk_width = mean_width(&wk.body, mc, aux_seed(cfg, &format!("wk_width/{tag}")))?;
        report.aggregate(&format!("{tag}/wk_vertices"), vertices.nrows());
        report.aggregate(&format!("{tag}/wk_support_size"), wk.m);
        report.aggregate(&format!("{tag}/wk_width_ratio"), num(wk_width.mean / (rho * (k as f64).sqrt())));
        report.verdict(Verdict::check(
            &format!("{tag}/wk_membership"),
            inside == vertices.nrows(),
            inside as f64,
            &format!("all {} vertices inside", vertices.nrows()),
        ));

        let n_rows = ((c * k as f64).round() as usize).max(1);
        let target = ((c3 * k as f64).round() as usize).clamp(1, n_rows);
        let rows = par_trials(cfg, j * trials, trials, |trial, seed| {
            let gamma = sample_matrix(law, n_rows, n, seed)?;
            let image = project_body(&body, &gamma)?;
            let opts = search_options(cfg, derive_seed(seed, &[1]));
            let found = subset_cube_search(&image, target, cfg.budget.unwrap_or(1), seed, &opts)?;
            Ok((trial, seed, found))
        })?;
        let mut normalized = Vec::with_capacity(trials);
        for (trial, seed, found) in rows {
            let side = found.cube_side / rho;
            normalized.push(side);
            report.push_row(
                trial,
                seed,
                vec![json!(n), json!(k), json!(n_rows), json!(found.indices.len()), num(found.cube_side), num(side)],
            );
        }
        let med = median_of(&normalized);
        report.aggregate(&format!("{tag}/normalized_side_median"), num(med));
        medians.push(med);
    }

    // The first cell fixes the constant; the spread bounds every cell's drift from it.
    report.aggregate("calibrated_constant", num(medians.first().copied().unwrap_or(f64::NAN)));
    report.aggregate("median_spread", num(spread(&medians)));
    report.verdict(Verdict::at_most("normalized_side_spread", spread(&medians), STABILITY_FACTOR));
    Ok(report)
}
