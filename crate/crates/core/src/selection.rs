//! Coordinate-subset cube extraction, separated nets and Hamming packings.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::{invalid, Result};
use crate::inclusion::{max_cube_side_from, InclusionOptions, Mode};
use crate::linalg::{Matrix, Vector};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    /// Coordinate removed at this step (0-based, in the original numbering).
    pub removed: usize,
    /// Cube-side estimate of the index set before the removal.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    /// Sorted, 0-based.
    pub indices: Vec<usize>,
    pub cube_side: f64,
    /// `cube_side·√|I|`.
    pub score: f64,
    pub trace: Vec<TraceStep>,
    pub mode: Mode,
    /// Run that produced the result; run 0 is the unperturbed greedy pass.
    pub run: usize,
}

/// Greedy backward elimination: repeatedly compute the cube side of `Q_I V` with its binding
/// direction `z*` and drop the coordinate with the largest `|z*_i|`. Run 0 uses the witness
/// as is; runs `1..budget` add a random offset of up to a tenth of `max|z*|` before picking.
/// The result with the best score wins (ties go to the lower run).
pub fn subset_cube_search(
    body: &ConvexBody,
    target_size: usize,
    budget: usize,
    seed: u64,
    opts: &InclusionOptions,
) -> Result<SubsetResult> {
    let n = body.dim();
    if target_size == 0 || target_size > n {
        return Err(invalid(format!("target size must lie in 1..={n}, got {target_size}")));
    }
    let runs: Vec<Result<SubsetResult>> =
        (0..budget.max(1)).into_par_iter().map(|run| greedy_run(body, target_size, run, seed, opts)).collect();
    let mut best: Option<SubsetResult> = None;
    for r in runs {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.score > b.score) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Candidates per elimination step whose removal is actually evaluated.
const LOOKAHEAD: usize = 3;

fn greedy_run(body: &ConvexBody, target: usize, run: usize, seed: u64, opts: &InclusionOptions) -> Result<SubsetResult> {
    let run_seed = derive_seed(seed, &[run as u64]);
    let mut rng = stream_rng(run_seed, u64::MAX);
    let mut indices: Vec<usize> = (0..body.dim()).collect();
    let mut trace = Vec::new();
    let mut iteration = 0;
    let side_of = |indices: &[usize], hint: Option<Vector>, iteration: usize, slot: usize| {
        let restricted = body.restrict_coordinates(indices)?;
        let step_opts = InclusionOptions { seed: derive_seed(run_seed, &[iteration as u64, slot as u64]), ..*opts };
        max_cube_side_from(&restricted, &step_opts, hint.as_slice())
    };
    let mut side = side_of(&indices, None, 0, 0)?;
    while indices.len() > target {
        let z = &side.witness;
        let zmax = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut keyed: Vec<(f64, usize)> = z
            .iter()
            .enumerate()
            .map(|(pos, zi)| {
                let jitter = if run == 0 { 0.0 } else { 0.1 * zmax * rand::Rng::random::<f64>(&mut rng) };
                (zi.abs() + jitter, pos)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keyed.truncate(LOOKAHEAD);
        let tried: Vec<Result<(usize, crate::inclusion::CubeSide)>> = keyed
            .par_iter()
            .enumerate()
            .map(|(slot, &(_, pos))| {
                let mut rest = indices.clone();
                rest.remove(pos);
                let mut hint = z.clone().remove_row(pos);
                let hint = if crate::linalg::normalize_mut(&mut hint) { Some(hint) } else { None };
                Ok((pos, side_of(&rest, hint, iteration + 1, slot)?))
            })
            .collect();
        let mut best: Option<(usize, crate::inclusion::CubeSide)> = None;
        for t in tried {
            let t = t?;
            if best.as_ref().is_none_or(|b| t.1.value > b.1.value) {
                best = Some(t);
            }
        }
        let (pick, next) = best.expect("at least one candidate");
        trace.push(TraceStep { iteration, removed: indices[pick], margin: side.value });
        indices.remove(pick);
        side = next;
        iteration += 1;
    }
    // Smaller index sets have larger cube sides, and each estimate bounds the true side from
    // above, so a running minimum from the end keeps the trace monotone.
    let mut bound = side.value;
    for step in trace.iter_mut().rev() {
        bound = bound.min(step.margin);
        step.margin = bound;
    }
    let score = side.value * (indices.len() as f64).sqrt();
    Ok(SubsetResult { indices, cube_side: side.value, score, trace, mode: side.mode, run })
}

/// Greedy scan in input order keeping points at distance ≥ `separation` from all kept points.
/// Returns the indices of the kept points.
pub fn separated_net_indices(points: &[Vector], separation: f64) -> Result<Vec<usize>> {
    if !(separation.is_finite() && separation > 0.0) {
        return Err(invalid("separation must be positive"));
    }
    let mut kept: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if kept.iter().all(|&j| (p - &points[j]).norm() >= separation) {
            kept.push(i);
        }
    }
    Ok(kept)
}

/// A maximal `separation`-separated subset of `points`, in input order.
pub fn separated_net(points: &[Vector], separation: f64) -> Result<Vec<Vector>> {
    Ok(separated_net_indices(points, separation)?.into_iter().map(|i| points[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    /// Sorted 0-based index sets.
    pub sets: Vec<Vec<usize>>,
    /// `ln |sets|`.
    pub log_cardinality: f64,
    /// True when the retry cap stopped the sampler before `count` sets were found.
    pub capped: bool,
    pub attempts: usize,
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    a.len() + b.len() - 2 * common
}

/// Rejection sampling of random `m`-subsets of `{0..n}` whose pairwise symmetric differences
/// are at least `min_sep`, stopping at `count` sets or after `50·count` draws.
pub fn hamming_separated_supports(n: usize, m: usize, min_sep: usize, count: usize, seed: u64) -> Result<Packing> {
    if m == 0 || m > n {
        return Err(invalid(format!("support size must lie in 1..={n}, got {m}")));
    }
    if min_sep > 2 * m {
        return Err(invalid(format!("separation {min_sep} exceeds 2m = {}", 2 * m)));
    }
    let mut rng = stream_rng(seed, 0);
    let cap = 50 * count;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut attempts = 0;
    while sets.len() < count && attempts < cap {
        attempts += 1;
        let mut s = sample(&mut rng, n, m).into_vec();
        s.sort_unstable();
        if sets.iter().all(|t| symmetric_difference(&s, t) >= min_sep) {
            sets.push(s);
        }
    }
    let capped = sets.len() < count;
    let log_cardinality = (sets.len() as f64).ln();
    Ok(Packing { sets, log_cardinality, capped, attempts })
}

/// The vertex set `W_k = {(c₁ρ_k/√m)·1_I : I ∈ 𝓑}` and its parameters.
#[derive(Debug, Clone)]
pub struct WkPolytope {
    pub body: ConvexBody,
    pub rho_k: f64,
    pub m: usize,
    pub c1: f64,
    pub packing: Packing,
}

/// `ρ_k = √(ln(en/k)/k)`.
pub fn rho_k(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    ((std::f64::consts::E * n / k).ln() / k).sqrt()
}

/// Builds `conv(±W_k)` with `m = max(1, round(k/ln(en/k)))`, a packing of `m`-subsets with
/// separation `round(m/2)` and `min(2^k, 4096)` requested sets. `c1` defaults to
/// `min(1, 1/(ρ_k√m))`, which puts every vertex in `B₁ⁿ ∩ ρ_kB₂ⁿ`.
pub fn wk_vertices(n: usize, k: usize, c1: Option<f64>, seed: u64) -> Result<WkPolytope> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let rho = rho_k(n, k);
    let m = ((k as f64 / (std::f64::consts::E * n as f64 / k as f64).ln()).round() as usize).max(1);
    if m > n {
        return Err(invalid(format!("support size {m} exceeds n = {n}")));
    }
    let c1 = c1.unwrap_or_else(|| (1.0 / (rho * (m as f64).sqrt())).min(1.0));
    if !(c1.is_finite() && c1 > 0.0) {
        return Err(invalid("c1 must be positive"));
    }
    let count = if k >= 12 { 4096 } else { 1usize << k };
    let min_sep = (m as f64 / 2.0).round() as usize;
    let packing = hamming_separated_supports(n, m, min_sep, count, seed)?;
    let weight = c1 * rho / (m as f64).sqrt();
    let mut vertices = Matrix::zeros(packing.sets.len(), n);
    for (r, set) in packing.sets.iter().enumerate() {
        for &i in set {
            vertices[(r, i)] = weight;
        }
    }
    Ok(WkPolytope { body: ConvexBody::polytope(vertices)?, rho_k: rho, m, c1, packing })
}
