//! Monte Carlo mean widths, critical dimensions, oscillation and empirical diameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{BodyKind, ConvexBody, RadiusEstimate};
use crate::ensembles::{project_body, SampleMatrix};
use crate::error::{invalid, Error, Result};
use crate::linalg::{mean_and_std_error, normalize_mut, top_k_indices, top_k_norm, Vector};
use crate::rng::{derive_seed, random_unit, stream_rng};
use crate::sphere::SphereSearch;

/// Largest vertex count for which the rearrangement statistic is computed by enumeration.
pub const EXACT_VERTEX_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

/// A supremum estimate; `exact` is false for lower bounds from local search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub value: f64,
    pub exact: bool,
}

/// Mean of `f(G)` over iid standard gaussian vectors, draw `i` using stream `i` of `seed`.
pub fn gaussian_average<F>(dim: usize, samples: usize, seed: u64, f: F) -> Result<WidthEstimate>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    if samples < 2 {
        return Err(invalid("at least two samples are required"));
    }
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            f(&crate::rng::gaussian_vector(&mut rng, dim))
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(WidthEstimate { mean, std_error, samples, seed })
}

/// `ℓ*(T) = E support(T, G)`.
pub fn mean_width(body: &ConvexBody, samples: usize, seed: u64) -> Result<WidthEstimate> {
    gaussian_average(body.dim(), samples, seed, |g| body.support_value(g))
}

/// `k* = (ℓ*/d)²`.
pub fn critical_dimension(body: &ConvexBody, width: &WidthEstimate) -> Result<f64> {
    let d = body.euclidean_radius().value;
    if d <= 0.0 {
        return Err(Error::Domain("critical dimension of a body with zero radius".into()));
    }
    Ok((width.mean / d).powi(2))
}

/// `(ε²/ln(1/ε))·k*` for `0 < ε < 1/2`.
pub fn eps_critical_dimension(k_star: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(invalid(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if !(k_star.is_finite() && k_star >= 0.0) {
        return Err(invalid("critical dimension must be finite and nonnegative"));
    }
    Ok(eps * eps / (1.0 / eps).ln() * k_star)
}

/// `φ(r) = ℓ*(T ∩ rB₂)`.
pub fn oscillation(body: &ConvexBody, r: f64, samples: usize, seed: u64) -> Result<WidthEstimate> {
    if !(r.is_finite() && r > 0.0) {
        return Err(invalid("oscillation radius must be positive"));
    }
    let capped = match body.kind() {
        BodyKind::IntersectionL1L2 { rho } => ConvexBody::intersection_l1_l2(body.dim(), rho.min(r))?,
        _ => ConvexBody::cap(body.clone(), r)?,
    };
    mean_width(&capped, samples, seed)
}

/// `sup_{t∈T} ‖Γt‖₂`, exact when the image radius has a closed form. The search seed is the
/// sample seed.
pub fn empirical_diameter(body: &ConvexBody, gamma: &SampleMatrix, restarts: usize) -> Result<RadiusEstimate> {
    let image = project_body(body, gamma)?;
    let search = SphereSearch { restarts: restarts.max(1), ..SphereSearch::sup_default(gamma.seed()) };
    Ok(image.euclidean_radius_with(&search))
}

/// `sup_{t∈T} (Σ_{i≤k} ((Γt)*_i)²)^{1/2}` where `(·)*` is the decreasing rearrangement of
/// absolute values. Exact for polytopes with at most [`EXACT_VERTEX_LIMIT`] vertices and for
/// `k = N` with an exact diameter; otherwise the best of `restarts` alternating ascents.
pub fn rearrangement_stat(body: &ConvexBody, gamma: &SampleMatrix, k: usize, restarts: usize) -> Result<SupEstimate> {
    let n_rows = gamma.rows();
    if k == 0 || k > n_rows {
        return Err(invalid(format!("k must lie in 1..={n_rows}, got {k}")));
    }
    if gamma.cols() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), got: gamma.cols() });
    }
    if k == n_rows {
        let d = empirical_diameter(body, gamma, restarts)?;
        return Ok(SupEstimate { value: d.value, exact: d.exact });
    }
    let g = gamma.matrix();
    if let BodyKind::SymmetricPolytope { vertices } = body.kind() {
        if vertices.nrows() <= EXACT_VERTEX_LIMIT {
            // The top-k ℓ₂ mass is a norm, so its maximum over conv(±v) sits at a vertex.
            let images = g * vertices.transpose();
            let value = images
                .column_iter()
                .map(|c| top_k_norm(c.as_slice(), k))
                .fold(0.0, f64::max);
            return Ok(SupEstimate { value, exact: true });
        }
    }
    let seed = derive_seed(gamma.seed(), &[k as u64]);
    let best = (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = stream_rng(seed, run);
            let mut z = random_unit(&mut rng, n_rows);
            let mut best = 0.0f64;
            for _ in 0..200 {
                let t = body.support_and_point(&g.tr_mul(&z)).1;
                let y = g * &t;
                let value = top_k_norm(y.as_slice(), k);
                if value <= best * (1.0 + 1e-14) {
                    break;
                }
                best = value;
                let mut next = Vector::zeros(n_rows);
                for i in top_k_indices(y.as_slice(), k) {
                    next[i] = y[i];
                }
                if !normalize_mut(&mut next) {
                    break;
                }
                z = next;
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(SupEstimate { value: best, exact: false })
}

/// `ℓ*(ΓT)`.
pub fn projected_width(body: &ConvexBody, gamma: &SampleMatrix, samples: usize, seed: u64) -> Result<WidthEstimate> {
    mean_width(&project_body(body, gamma)?, samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_matrix, ScalarLaw};
    use crate::linalg::Matrix;

    fn within(est: &WidthEstimate, target: f64, k: f64) -> bool {
        (est.mean - target).abs() <= k * est.std_error
    }

    #[test]
    fn analytic_widths() {
        let b2 = ConvexBody::euclidean_ball(100, 1.0).unwrap();
        let w = mean_width(&b2, 10_000, 1).unwrap();
        assert!(within(&w, 9.975_031_639_551_357, 3.0), "{w:?}");
        let cube = ConvexBody::cube(3, 1.0).unwrap();
        let w = mean_width(&cube, 10_000, 2).unwrap();
        assert!(within(&w, 3.0 * (2.0 / std::f64::consts::PI).sqrt(), 3.0), "{w:?}");
        let b1 = ConvexBody::l1_ball(1, 1.0).unwrap();
        let w = mean_width(&b1, 10_000, 3).unwrap();
        assert!(within(&w, (2.0 / std::f64::consts::PI).sqrt(), 3.0), "{w:?}");
    }

    #[test]
    fn widths_are_deterministic_and_homogeneous() {
        let t = ConvexBody::intersection_l1_l2(20, 0.4).unwrap();
        let a = mean_width(&t, 500, 9).unwrap();
        let b = mean_width(&t, 500, 9).unwrap();
        assert_eq!(a, b);
        let scaled = mean_width(&ConvexBody::euclidean_ball(20, 3.0).unwrap(), 500, 9).unwrap();
        let unit = mean_width(&ConvexBody::euclidean_ball(20, 1.0).unwrap(), 500, 9).unwrap();
        assert!((scaled.mean - 3.0 * unit.mean).abs() <= 1e-12 * scaled.mean);
        let bigger = mean_width(&ConvexBody::euclidean_ball(20, 1.5).unwrap(), 500, 9).unwrap();
        assert!(bigger.mean >= unit.mean);
        assert!(mean_width(&t, 1, 0).is_err());
    }

    #[test]
    fn width_estimate_json_shape() {
        let w = WidthEstimate { mean: 1.5, std_error: 0.25, samples: 10, seed: 3 };
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, r#"{"mean":1.5,"std_error":0.25,"samples":10,"seed":3}"#);
    }

    #[test]
    fn critical_dimensions() {
        let b2 = ConvexBody::euclidean_ball(100, 1.0).unwrap();
        let w = mean_width(&b2, 10_000, 5).unwrap();
        let k = critical_dimension(&b2, &w).unwrap();
        assert!((k - 100.0).abs() < 5.0, "{k}");
        let b1 = ConvexBody::l1_ball(1024, 1.0).unwrap();
        let k1 = critical_dimension(&b1, &mean_width(&b1, 2000, 5).unwrap()).unwrap();
        assert!((2.0..=40.0).contains(&k1), "{k1}");
        let b1s = ConvexBody::l1_ball(1024, 7.0).unwrap();
        let k2 = critical_dimension(&b1s, &mean_width(&b1s, 2000, 5).unwrap()).unwrap();
        assert!((k1 - k2).abs() < 1e-9 * k1);
        let zero = ConvexBody::euclidean_ball(3, 0.0).unwrap();
        assert!(matches!(critical_dimension(&zero, &mean_width(&zero, 10, 0).unwrap()), Err(Error::Domain(_))));
    }

    #[test]
    fn eps_critical() {
        let e = std::f64::consts::E;
        assert!((eps_critical_dimension(100.0, 1.0 / e).unwrap() - 100.0 / (e * e)).abs() < 1e-12);
        assert_eq!(eps_critical_dimension(0.0, 0.3).unwrap(), 0.0);
        assert!((eps_critical_dimension(50.0, 0.25).unwrap() - 50.0 * 0.0625 / 4f64.ln()).abs() < 1e-12);
        assert!(eps_critical_dimension(10.0, 0.5).is_err());
        assert!(eps_critical_dimension(10.0, 0.999).is_err());
    }

    #[test]
    fn oscillation_of_the_ball() {
        let b2 = ConvexBody::euclidean_ball(30, 1.0).unwrap();
        let full = mean_width(&b2, 2000, 4).unwrap();
        let o = oscillation(&b2, 2.0, 2000, 4).unwrap();
        assert!((o.mean - full.mean).abs() < 1e-9 * full.mean);
        let half = oscillation(&b2, 0.5, 2000, 4).unwrap();
        assert!((half.mean - 0.5 * full.mean).abs() < 1e-9 * full.mean);
        let poly = ConvexBody::polytope(Matrix::identity(3, 3)).unwrap();
        assert!(matches!(oscillation(&poly, 0.5, 10, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn oscillation_two_routes_agree() {
        let n = 64;
        let k = 8.0f64;
        let rho = ((std::f64::consts::E * n as f64 / k).ln() / k).sqrt();
        let generic = oscillation(&ConvexBody::l1_ball(n, 1.0).unwrap(), rho, 400, 8).unwrap();
        let direct = mean_width(&ConvexBody::intersection_l1_l2(n, rho).unwrap(), 400, 8).unwrap();
        assert!((generic.mean - direct.mean).abs() < 1e-6 * direct.mean, "{generic:?} {direct:?}");
    }

    #[test]
    fn oscillation_is_monotone() {
        let cube = ConvexBody::cube(10, 1.0).unwrap();
        let mut prev = 0.0;
        for r in [0.2, 0.5, 1.0, 2.0, 3.0, 4.0] {
            let o = oscillation(&cube, r, 200, 1).unwrap();
            assert!(o.mean >= prev - 1e-9, "{r}: {} < {prev}", o.mean);
            prev = o.mean;
        }
    }

    #[test]
    fn empirical_diameters() {
        let gamma = sample_matrix(ScalarLaw::Gaussian, 12, 30, 3).unwrap();
        let d = empirical_diameter(&ConvexBody::euclidean_ball(30, 1.0).unwrap(), &gamma, 8).unwrap();
        let svd = gamma.matrix().clone().svd(false, false).singular_values.max();
        assert!(d.exact && (d.value - svd).abs() < 1e-6);
        let d1 = empirical_diameter(&ConvexBody::l1_ball(30, 1.0).unwrap(), &gamma, 8).unwrap();
        let cols = gamma.matrix().column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!((d1.value - cols).abs() < 1e-12);
        let t0 = Vector::from_fn(30, |i, _| (i as f64).sin());
        let pair = ConvexBody::polytope(Matrix::from_row_slice(1, 30, t0.as_slice())).unwrap();
        let dp = empirical_diameter(&pair, &gamma, 8).unwrap();
        assert!((dp.value - (gamma.matrix() * &t0).norm()).abs() < 1e-12);
    }

    #[test]
    fn rearrangement_cases() {
        let gamma = sample_matrix(ScalarLaw::Rademacher, 16, 10, 5).unwrap();
        let t0 = Vector::from_fn(10, |i, _| 1.0 / (1.0 + i as f64));
        let pair = ConvexBody::polytope(Matrix::from_row_slice(1, 10, t0.as_slice())).unwrap();
        let y = gamma.matrix() * &t0;
        for k in [1, 4, 9] {
            let s = rearrangement_stat(&pair, &gamma, k, 4).unwrap();
            assert!((s.value - top_k_norm(y.as_slice(), k)).abs() < 1e-12);
        }
        let full = rearrangement_stat(&pair, &gamma, 16, 4).unwrap();
        assert!((full.value - y.norm()).abs() < 1e-12);
        assert!(rearrangement_stat(&pair, &gamma, 0, 4).is_err());
        assert!(rearrangement_stat(&pair, &gamma, 17, 4).is_err());
    }

    #[test]
    fn rearrangement_polytope_matches_vertex_scan() {
        let mut rng = stream_rng(17, 0);
        let verts = Matrix::from_fn(100, 8, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
        let poly = ConvexBody::polytope(verts.clone()).unwrap();
        let gamma = sample_matrix(ScalarLaw::Gaussian, 12, 8, 2).unwrap();
        let scan = verts
            .row_iter()
            .map(|v| {
                let mut a: Vec<f64> = (gamma.matrix() * v.transpose()).iter().map(|x| x.abs()).collect();
                a.sort_by(|p, q| q.total_cmp(p));
                a[..3].iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        let s = rearrangement_stat(&poly, &gamma, 3, 4).unwrap();
        assert!(s.exact && (s.value - scan).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 1..=12 {
            let v = rearrangement_stat(&poly, &gamma, k, 4).unwrap().value;
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        let d = empirical_diameter(&poly, &gamma, 4).unwrap();
        assert!((prev - d.value).abs() < 1e-12);
    }

    #[test]
    fn rearrangement_heuristic_bounds() {
        // Heuristic route on a ball: bounded by the diameter and not worse than random points.
        let b = ConvexBody::euclidean_ball(10, 1.0).unwrap();
        let gamma = sample_matrix(ScalarLaw::Gaussian, 20, 10, 6).unwrap();
        let s = rearrangement_stat(&b, &gamma, 5, 16).unwrap();
        let d = empirical_diameter(&b, &gamma, 4).unwrap().value;
        assert!(!s.exact && s.value <= d + 1e-12);
        let mut rng = stream_rng(1, 0);
        for _ in 0..50 {
            let t = random_unit(&mut rng, 10);
            assert!(s.value >= top_k_norm((gamma.matrix() * t).as_slice(), 5) - 1e-12);
        }
    }

    #[test]
    fn projected_widths() {
        let gamma = sample_matrix(ScalarLaw::Gaussian, 10, 100, 12).unwrap();
        let b2 = ConvexBody::euclidean_ball(100, 1.0).unwrap();
        let w = projected_width(&b2, &gamma, 4000, 1).unwrap();
        assert!((w.mean / 1000f64.sqrt() - 1.0).abs() < 0.1, "{w:?}");
        let direct = gaussian_average(10, 4000, 1, |g| gamma.matrix().tr_mul(g).norm()).unwrap();
        assert!((direct.mean - w.mean).abs() < 1e-12);
        let id = SampleMatrix::from_matrix(Matrix::identity(5, 5), ScalarLaw::Gaussian, 0);
        let cube = ConvexBody::cube(5, 1.0).unwrap();
        let a = projected_width(&cube, &id, 300, 2).unwrap();
        let b = mean_width(&cube, 300, 2).unwrap();
        assert!((a.mean - b.mean).abs() < 1e-12);
    }
}
