//! Certified inclusion tests between a body and Euclidean balls or cubes.
//!
//! Every test reduces to an optimization of the support function over the unit sphere:
//! `ρB₂ ⊂ V ⇔ inf_z support(V,z) ≥ ρ`, `rB∞ ⊂ V ⇔ inf_z support(V,z) − r‖z‖₁ ≥ 0` and
//! `V ⊂ RB₂ ⇔ sup_z support(V,z) ≤ R`. Closed forms are used where available; in low
//! dimension a sphere net with a Lipschitz bound certifies the optimum; otherwise a
//! multi-start search gives a one-sided answer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{BodyKind, ConvexBody};
use crate::error::{invalid, Result};
use crate::linalg::{all_ones_unit, min_transpose_gain, norm1, normalize_mut, sign_vector, unit, Matrix, Vector};
use crate::sphere::{minimize, net_maximize, net_minimize, sphere_net, SphereOptimum, SphereSearch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Verified,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    NetCertified,
    Heuristic,
}

/// Term subtracted from the support function on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    None,
    /// `r‖z‖₁`.
    L1Scaled(f64),
}

impl Penalty {
    fn scale(&self) -> f64 {
        match self {
            Penalty::None => 0.0,
            Penalty::L1Scaled(r) => *r,
        }
    }
}

/// The inequality a certificate speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum InclusionTest {
    /// `ρB₂ ⊂ V`.
    BallInBody { rho: f64 },
    /// `V ⊂ RB₂`.
    BodyInBall { radius: f64 },
    /// `rB∞ ⊂ V`.
    CubeInBody { side: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InclusionOptions {
    /// Restarts for inf-type searches.
    pub restarts: usize,
    /// Restarts for sup-type searches.
    pub sup_restarts: usize,
    pub iterations: usize,
    pub step: f64,
    pub net_dim_cap: usize,
    pub net_resolution: f64,
    /// Absolute tolerance on margins.
    pub tol: f64,
    pub seed: u64,
}

impl Default for InclusionOptions {
    fn default() -> Self {
        InclusionOptions {
            restarts: 256,
            sup_restarts: 64,
            iterations: 500,
            step: 0.1,
            net_dim_cap: 3,
            net_resolution: 0.01,
            tol: 1e-7,
            seed: 0,
        }
    }
}

impl InclusionOptions {
    fn inf_search(&self) -> SphereSearch {
        SphereSearch { restarts: self.restarts, iterations: self.iterations, step: self.step, seed: self.seed }
    }

    fn sup_search(&self) -> SphereSearch {
        SphereSearch { restarts: self.sup_restarts, iterations: self.iterations, step: self.step, seed: self.seed }
    }
}

/// Result of an inf-type search over the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMinimum {
    /// Best value found; attained at `witness`, so it is an upper bound on the infimum.
    pub value: f64,
    #[serde(with = "crate::linalg::serde_vector")]
    pub witness: Vector,
    pub mode: Mode,
    /// Certified lower bound on the infimum (exact in analytic mode, net-based otherwise).
    pub lower_bound: Option<f64>,
    pub lipschitz: Option<f64>,
    pub net_resolution: Option<f64>,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCertificate {
    #[serde(flatten)]
    pub test: InclusionTest,
    pub status: Status,
    /// Signed slack of the defining inequality at the witness.
    pub margin: f64,
    /// Unit direction at which the inequality was evaluated.
    #[serde(with = "crate::linalg::serde_vector")]
    pub witness: Vector,
    pub mode: Mode,
    pub restarts: usize,
    pub net_resolution: Option<f64>,
    pub lipschitz: Option<f64>,
}

impl InclusionCertificate {
    /// Slack of the inequality at the witness, recomputed from the support function alone.
    pub fn recheck(&self, body: &ConvexBody) -> Result<f64> {
        let z = &self.witness;
        let h = body.support(z)?;
        let norm = z.norm();
        Ok(match self.test {
            InclusionTest::BallInBody { rho } => h - rho * norm,
            InclusionTest::CubeInBody { side } => h - side * norm1(z),
            InclusionTest::BodyInBall { radius } => radius * norm - h,
        })
    }

    pub fn is_verified(&self) -> bool {
        self.status == Status::Verified
    }

    pub fn is_refuted(&self) -> bool {
        self.status == Status::Refuted
    }
}

fn status_for(margin: f64, mode: Mode, certified_lower: Option<f64>, tol: f64) -> Status {
    match mode {
        Mode::Analytic if margin >= -tol => Status::Verified,
        Mode::Analytic => Status::Refuted,
        _ if margin < 0.0 => Status::Refuted,
        Mode::NetCertified if certified_lower.is_some_and(|l| l >= tol) => Status::Verified,
        _ => Status::Inconclusive,
    }
}

fn analytic(value: f64, witness: Vector, restarts: usize) -> SphereMinimum {
    SphereMinimum { value, witness, mode: Mode::Analytic, lower_bound: Some(value), lipschitz: None, net_resolution: None, restarts }
}

/// Closed-form infimum of `support(V,z) − r‖z‖₁` over the unit sphere, when known.
fn analytic_min_support(body: &ConvexBody, penalty: Penalty) -> Option<(f64, Vector)> {
    let n = body.dim();
    let sqrt_n = (n as f64).sqrt();
    let r = penalty.scale();
    match (body.kind(), penalty) {
        (BodyKind::EuclideanBall { radius }, Penalty::None) => Some((*radius, unit(n, 0))),
        (BodyKind::EuclideanBall { radius }, Penalty::L1Scaled(_)) => Some((radius - r * sqrt_n, all_ones_unit(n))),
        (BodyKind::CubeBall { radius }, _) => {
            // R‖z‖₁ − r‖z‖₁ on the sphere: ‖z‖₁ ranges over [1, √n].
            if *radius >= r {
                Some((radius - r, unit(n, 0)))
            } else {
                Some(((radius - r) * sqrt_n, all_ones_unit(n)))
            }
        }
        (BodyKind::L1Ball { radius }, Penalty::None) => Some((radius / sqrt_n, all_ones_unit(n))),
        (BodyKind::Ellipsoid { semi_axes }, Penalty::None) => {
            let j = argmin(semi_axes.as_slice());
            Some((semi_axes[j], unit(n, j)))
        }
        (BodyKind::IntersectionL1L2 { rho }, Penalty::None) => {
            // B₁ ∩ ρB₂ contains (1/√n)B₂ when ρ√n ≥ 1 and touches it along the diagonal.
            if rho * sqrt_n >= 1.0 {
                Some((1.0 / sqrt_n, all_ones_unit(n)))
            } else {
                Some((*rho, unit(n, 0)))
            }
        }
        (BodyKind::LinearImage { base, matrix }, Penalty::None) => {
            let effective: Matrix = match base.kind() {
                BodyKind::EuclideanBall { radius } => matrix.as_ref() * *radius,
                BodyKind::Ellipsoid { semi_axes } => matrix.as_ref() * Matrix::from_diagonal(semi_axes),
                _ => return None,
            };
            // support(z) = ‖Aᵀz‖₂, minimized by the bottom left singular vector.
            let (gain, z) = min_transpose_gain(&effective);
            Some((gain, z))
        }
        _ => None,
    }
}

fn argmin(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v < x[best] {
            best = i;
        }
    }
    best
}

/// `inf_{‖z‖=1} support(V,z) − penalty(z)`.
pub fn min_support_on_sphere(body: &ConvexBody, penalty: Penalty, opts: &InclusionOptions) -> Result<SphereMinimum> {
    if let Penalty::L1Scaled(r) = penalty {
        if !(r.is_finite() && r >= 0.0) {
            return Err(invalid("penalty scale must be finite and nonnegative"));
        }
    }
    if let Some((value, witness)) = analytic_min_support(body, penalty) {
        return Ok(analytic(value, witness, 0));
    }
    let n = body.dim();
    let r = penalty.scale();
    let f = |z: &Vector| body.support_value(z) - r * norm1(z);
    let oracle = |z: &Vector| {
        let (h, t) = body.support_and_point(z);
        (h - r * norm1(z), t - sign_vector(z) * r)
    };
    let probes = standard_probes(n);
    if n <= opts.net_dim_cap {
        let net = sphere_net(n, opts.net_resolution)?;
        let (net_value, net_point) = net_minimize(&net, f);
        // Polish the best net point; the certificate still rests on the net value.
        let polished = crate::sphere::descend(net_point.clone(), opts.iterations, opts.step * net.covering_radius, &oracle, 0);
        let (value, witness) = if polished.value < net_value { (polished.value, polished.point) } else { (net_value, net_point) };
        let lipschitz = body.radius_upper_bound() + r * (n as f64).sqrt();
        return Ok(SphereMinimum {
            value,
            witness,
            mode: Mode::NetCertified,
            lower_bound: Some(net_value - lipschitz * net.covering_radius),
            lipschitz: Some(lipschitz),
            net_resolution: Some(net.covering_radius),
            restarts: 0,
        });
    }
    let opt = minimize(n, &opts.inf_search(), &probes, oracle);
    Ok(SphereMinimum {
        value: opt.value,
        witness: opt.point,
        mode: Mode::Heuristic,
        lower_bound: None,
        lipschitz: None,
        net_resolution: None,
        restarts: opts.restarts,
    })
}

fn standard_probes(n: usize) -> Vec<Vector> {
    let mut probes = vec![all_ones_unit(n)];
    if n <= 64 {
        probes.extend((0..n).map(|i| unit(n, i)));
    }
    probes
}

fn from_minimum(test: InclusionTest, min: SphereMinimum, offset: f64, tol: f64) -> InclusionCertificate {
    let margin = min.value - offset;
    let certified_lower = min.lower_bound.map(|l| l - offset);
    InclusionCertificate {
        test,
        status: status_for(margin, min.mode, certified_lower, tol),
        margin,
        witness: min.witness,
        mode: min.mode,
        restarts: min.restarts,
        net_resolution: min.net_resolution,
        lipschitz: min.lipschitz,
    }
}

/// `ρB₂ ⊂ V`.
pub fn ball_in_body(body: &ConvexBody, rho: f64, opts: &InclusionOptions) -> Result<InclusionCertificate> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(invalid("rho must be finite and nonnegative"));
    }
    let min = min_support_on_sphere(body, Penalty::None, opts)?;
    Ok(from_minimum(InclusionTest::BallInBody { rho }, min, rho, opts.tol))
}

/// `rB∞ ⊂ V`.
pub fn cube_in_body(body: &ConvexBody, r: f64, opts: &InclusionOptions) -> Result<InclusionCertificate> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(invalid("cube side must be finite and nonnegative"));
    }
    let min = min_support_on_sphere(body, Penalty::L1Scaled(r), opts)?;
    Ok(from_minimum(InclusionTest::CubeInBody { side: r }, min, 0.0, opts.tol))
}

/// `V ⊂ RB₂`.
pub fn body_in_ball(body: &ConvexBody, radius: f64, opts: &InclusionOptions) -> Result<InclusionCertificate> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius must be positive"));
    }
    let test = InclusionTest::BodyInBall { radius };
    let est = body.euclidean_radius_with(&opts.sup_search());
    let direction = |p: &Vector| {
        let norm = p.norm();
        if norm > 0.0 {
            p / norm
        } else {
            unit(body.dim(), 0)
        }
    };
    let margin = radius - est.value;
    let cert = |status, margin, witness, mode, net_resolution, lipschitz| InclusionCertificate {
        test,
        status,
        margin,
        witness,
        mode,
        restarts: if mode == Mode::Heuristic { opts.sup_restarts } else { 0 },
        net_resolution,
        lipschitz,
    };
    if est.exact {
        let status = status_for(margin, Mode::Analytic, None, opts.tol);
        return Ok(cert(status, margin, direction(&est.point), Mode::Analytic, None, None));
    }
    if margin < 0.0 {
        return Ok(cert(Status::Refuted, margin, direction(&est.point), Mode::Heuristic, None, None));
    }
    let upper = body.radius_upper_bound();
    if upper <= radius {
        // A rigorous radius bound already fits inside the ball.
        return Ok(cert(Status::Verified, margin, direction(&est.point), Mode::Analytic, None, None));
    }
    let n = body.dim();
    if n <= opts.net_dim_cap {
        let net = sphere_net(n, opts.net_resolution)?;
        let c = net.covering_radius;
        let (net_max, z) = net_maximize(&net, |z| body.support_value(z));
        if c < 1.0 {
            // For a norm h with maximum M on the sphere, a net point within c of the maximizer
            // has h ≥ M(1 − c), so M ≤ net_max/(1 − c).
            let lipschitz = net_max / (1.0 - c);
            let best = net_max.max(est.value);
            let margin = radius - best;
            let status = if margin < 0.0 {
                Status::Refuted
            } else if radius - net_max - lipschitz * c >= opts.tol {
                Status::Verified
            } else {
                Status::Inconclusive
            };
            let witness = if net_max >= est.value { z } else { direction(&est.point) };
            return Ok(cert(status, margin, witness, Mode::NetCertified, Some(c), Some(lipschitz)));
        }
    }
    Ok(cert(Status::Inconclusive, margin, direction(&est.point), Mode::Heuristic, None, None))
}

/// Cube-side estimate `inf_{z≠0} support(V,z)/‖z‖₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeSide {
    pub value: f64,
    #[serde(with = "crate::linalg::serde_vector")]
    pub witness: Vector,
    pub mode: Mode,
    pub lower_bound: Option<f64>,
}

fn analytic_cube_side(body: &ConvexBody) -> Option<(f64, Vector)> {
    let n = body.dim();
    let nf = n as f64;
    match body.kind() {
        BodyKind::EuclideanBall { radius } => Some((radius / nf.sqrt(), all_ones_unit(n))),
        BodyKind::CubeBall { radius } => Some((*radius, unit(n, 0))),
        BodyKind::L1Ball { radius } => Some((radius / nf, all_ones_unit(n))),
        BodyKind::IntersectionL1L2 { rho } => Some(((1.0 / nf).min(rho / nf.sqrt()), all_ones_unit(n))),
        BodyKind::Ellipsoid { semi_axes } => {
            // rB∞ ⊂ E iff every vertex r·s satisfies r²Σa⁻² ≤ 1; the binding functional is ∝ a⁻².
            let inv2 = semi_axes.map(|a| 1.0 / (a * a));
            let side = 1.0 / inv2.sum().sqrt();
            Some((side, inv2.normalize()))
        }
        _ => None,
    }
}

/// Largest `r` with `rB∞ ⊂ V`, estimated as `inf_z support(V,z)/‖z‖₁`.
pub fn max_cube_side(body: &ConvexBody, opts: &InclusionOptions) -> Result<CubeSide> {
    max_cube_side_from(body, opts, &[])
}

/// [`max_cube_side`] with extra starting directions for the heuristic search.
pub fn max_cube_side_from(body: &ConvexBody, opts: &InclusionOptions, hints: &[Vector]) -> Result<CubeSide> {
    if let Some((value, witness)) = analytic_cube_side(body) {
        return Ok(CubeSide { value, witness, mode: Mode::Analytic, lower_bound: Some(value) });
    }
    let n = body.dim();
    let ratio = |z: &Vector| body.support_value(z) / norm1(z);
    let oracle = |z: &Vector| {
        let (h, t) = body.support_and_point(z);
        let l1 = norm1(z);
        let q = h / l1;
        (q, (t - sign_vector(z) * q) / l1)
    };
    if n <= opts.net_dim_cap {
        let net = sphere_net(n, opts.net_resolution)?;
        let (net_value, net_point) = net_minimize(&net, ratio);
        let polished = crate::sphere::descend(net_point.clone(), opts.iterations, opts.step * net.covering_radius, &oracle, 0);
        let (value, witness) = if polished.value < net_value { (polished.value, polished.point) } else { (net_value, net_point) };
        let lipschitz = body.radius_upper_bound() * (1.0 + (n as f64).sqrt());
        return Ok(CubeSide {
            value,
            witness,
            mode: Mode::NetCertified,
            lower_bound: Some(net_value - lipschitz * net.covering_radius),
        });
    }
    if n <= VERTEX_ENUMERATION_DIM {
        let (value, witness) = enumerate_cube_vertices(body, opts);
        return Ok(CubeSide { value, witness, mode: Mode::Heuristic, lower_bound: None });
    }
    let mut probes = standard_probes(n);
    probes.extend(hints.iter().filter(|h| h.len() == n).cloned());
    let opt = minimize(n, &opts.inf_search(), &probes, oracle);
    let opt = flip_polish(opt, opts, &oracle);
    Ok(CubeSide { value: opt.value, witness: opt.point, mode: Mode::Heuristic, lower_bound: None })
}

/// Up to this dimension the cube side is searched vertex by vertex.
pub const VERTEX_ENUMERATION_DIM: usize = 10;

/// `rB∞ ⊂ V` iff `r·s ∈ V` for every sign vector `s`, and the largest such `r` for one vertex
/// is `inf support(V,z)/⟨s,z⟩` over `⟨s,z⟩ > 0`, a quasi-convex problem. Solving it for each
/// of the `2^(n−1)` vertices up to sign removes the orthant guessing of the plain search.
fn enumerate_cube_vertices(body: &ConvexBody, opts: &InclusionOptions) -> (f64, Vector) {
    let n = body.dim();
    let solve = |mask: usize, start: Vector, step: f64| {
        let s = Vector::from_fn(n, |i, _| if i > 0 && mask >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 });
        let oracle = |z: &Vector| {
            let dot = s.dot(z);
            if dot <= 0.0 {
                return (f64::INFINITY, -&s);
            }
            let (h, t) = body.support_and_point(z);
            let q = h / dot;
            (q, (t - &s * q) / dot)
        };
        let start = if start.len() == n { start } else { &s / (n as f64).sqrt() };
        let opt = crate::sphere::descend(start, opts.iterations, step, &oracle, mask);
        (body.support_value(&opt.point) / norm1(&opt.point), mask, opt.point)
    };
    let mut coarse: Vec<(f64, usize, Vector)> =
        (0..1usize << (n - 1)).into_par_iter().map(|mask| solve(mask, Vector::zeros(0), opts.step)).collect();
    coarse.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    coarse.truncate(VERTEX_POLISH);
    // A second pass with a smaller step on the most binding vertices.
    let fine: Vec<(f64, usize, Vector)> =
        coarse.par_iter().map(|(_, mask, z)| solve(*mask, z.clone(), 0.1 * opts.step)).collect();
    coarse
        .into_iter()
        .chain(fine)
        .reduce(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .map(|(value, _, z)| (value, z))
        .expect("at least one vertex")
}

const VERTEX_POLISH: usize = 4;

const FLIP_ROUNDS: usize = 4;
const FLIP_CANDIDATES: usize = 8;

/// The ratio h(z)/‖z‖₁ is quasi-convex on each orthant, so the hard part is picking the
/// orthant. Local search over sign patterns: restart the descent from the witness with one
/// of its smallest coordinates negated or zeroed, and keep any improvement. Moves are
/// screened with a short descent; only the most promising one gets the full budget.
fn flip_polish<F>(mut best: SphereOptimum, opts: &InclusionOptions, oracle: &F) -> SphereOptimum
where
    F: Fn(&Vector) -> (f64, Vector) + Sync,
{
    let n = best.point.len();
    let screen = (opts.iterations / 4).max(10);
    for _ in 0..FLIP_ROUNDS {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| best.point[a].abs().total_cmp(&best.point[b].abs()).then(a.cmp(&b)));
        order.truncate(FLIP_CANDIDATES);
        let moves: Vec<(usize, bool)> = order.iter().flat_map(|&i| [(i, true), (i, false)]).collect();
        let candidates: Vec<SphereOptimum> = moves
            .into_par_iter()
            .filter_map(|(i, negate)| {
                let mut z = best.point.clone();
                if negate {
                    z[i] = -z[i];
                } else {
                    z[i] = 0.0;
                    if !normalize_mut(&mut z) {
                        return None;
                    }
                }
                Some(crate::sphere::descend(z, screen, opts.step, oracle, best.run))
            })
            .collect();
        let round_best = candidates
            .into_iter()
            .reduce(|a, b| if b.value < a.value { b } else { a })
            .map(|c| crate::sphere::descend(c.point, opts.iterations, 0.5 * opts.step, oracle, best.run));
        match round_best {
            Some(c) if c.value < best.value * (1.0 - 1e-9) => best = c,
            _ => break,
        }
    }
    best
}

/// Two-sided certificate `ρ_in B₂ ⊂ V ⊂ R_out B₂`.
pub fn dvoretzky_certificate(
    body: &ConvexBody,
    rho_in: f64,
    r_out: f64,
    opts: &InclusionOptions,
) -> Result<(InclusionCertificate, InclusionCertificate)> {
    if !(rho_in >= 0.0 && rho_in <= r_out) {
        return Err(invalid(format!("need 0 ≤ rho_in ≤ R_out, got {rho_in} and {r_out}")));
    }
    Ok((ball_in_body(body, rho_in, opts)?, body_in_ball(body, r_out, opts)?))
}
