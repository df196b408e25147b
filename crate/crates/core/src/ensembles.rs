//! Scalar subgaussian laws, sample matrices Γ and ψ_α-norm estimation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bodies::ConvexBody;
use crate::error::{invalid, Error, Result};
use crate::linalg::{CompensatedSum, Matrix};
use crate::rng::stream_rng;

/// Largest number of matrix entries a single sample may hold.
pub const MAX_SAMPLE_ENTRIES: usize = 100_000_000;

/// Mean-zero, variance-one scalar laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarLaw {
    Gaussian,
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    UniformScaled,
}

impl ScalarLaw {
    pub const ALL: [ScalarLaw; 3] = [ScalarLaw::Gaussian, ScalarLaw::Rademacher, ScalarLaw::UniformScaled];

    /// Analytic ψ₂ norm: `√(8/3)` for the gaussian, `1/√ln 2` for signs, and the root of
    /// `E exp(ξ²/c²) = 2` for the scaled uniform law.
    pub fn declared_psi2(&self) -> f64 {
        match self {
            ScalarLaw::Gaussian => (8.0f64 / 3.0).sqrt(),
            ScalarLaw::Rademacher => 1.0 / std::f64::consts::LN_2.sqrt(),
            ScalarLaw::UniformScaled => 1.338_37,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Gaussian => StandardNormal.sample(rng),
            ScalarLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ScalarLaw::UniformScaled => (2.0 * rng.random::<f64>() - 1.0) * 3f64.sqrt(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarLaw::Gaussian => "gaussian",
            ScalarLaw::Rademacher => "rademacher",
            ScalarLaw::UniformScaled => "uniform_scaled",
        }
    }
}

impl fmt::Display for ScalarLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `{"law": "rademacher"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawDescriptor {
    pub law: ScalarLaw,
}

/// An N×n matrix whose rows are independent isotropic vectors with iid coordinates.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    matrix: Arc<Matrix>,
    law: ScalarLaw,
    seed: u64,
}

impl SampleMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn shared_matrix(&self) -> Arc<Matrix> {
        self.matrix.clone()
    }

    pub fn law(&self) -> ScalarLaw {
        self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Wraps an explicit matrix, e.g. one loaded from CSV.
    pub fn from_matrix(matrix: Matrix, law: ScalarLaw, seed: u64) -> Self {
        SampleMatrix { matrix: Arc::new(matrix), law, seed }
    }

    /// The sample with every entry multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        SampleMatrix { matrix: Arc::new(self.matrix.as_ref() * lambda), law: self.law, seed: self.seed }
    }

    /// The rows selected by `rows`, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.rows()) {
            return Err(invalid(format!("row {r} out of range for {} rows", self.rows())));
        }
        Ok(SampleMatrix { matrix: Arc::new(crate::linalg::select_rows(&self.matrix, rows)), law: self.law, seed: self.seed })
    }
}

/// Draws an `n_rows × n_cols` sample, filling entries row by row from one ChaCha8 stream.
pub fn sample_matrix(law: ScalarLaw, n_rows: usize, n_cols: usize, seed: u64) -> Result<SampleMatrix> {
    if n_rows == 0 || n_cols == 0 {
        return Err(invalid("sample dimensions must be positive"));
    }
    match n_rows.checked_mul(n_cols) {
        Some(total) if total <= MAX_SAMPLE_ENTRIES => {}
        _ => {
            return Err(Error::Config(format!(
                "a {n_rows}×{n_cols} sample exceeds the cap of {MAX_SAMPLE_ENTRIES} entries"
            )))
        }
    }
    let mut rng = stream_rng(seed, 0);
    let matrix = Matrix::from_row_iterator(n_rows, n_cols, (0..n_rows * n_cols).map(|_| law.sample(&mut rng)));
    Ok(SampleMatrix { matrix: Arc::new(matrix), law, seed })
}

/// `ΓT`, whose support at `z` is `support(T, Γᵀz)`.
pub fn project_body(body: &ConvexBody, gamma: &SampleMatrix) -> Result<ConvexBody> {
    ConvexBody::linear_image_shared(Arc::new(body.clone()), gamma.shared_matrix())
}

/// `Q_I V` for a sorted, duplicate-free, 0-based index set.
pub fn coordinate_restrict(body: &ConvexBody, indices: &[usize]) -> Result<ConvexBody> {
    body.restrict_coordinates(indices)
}

/// Empirical ψ₂ norm of a sample.
pub fn psi2_estimate(sample: &[f64]) -> Result<f64> {
    psi_alpha_estimate(sample, 2.0)
}

/// Smallest `c` (to relative precision 1e−3) with `mean exp(|x/c|^α) ≤ 2`.
pub fn psi_alpha_estimate(sample: &[f64], alpha: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(invalid("cannot estimate an Orlicz norm from an empty sample"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(invalid("alpha must be positive"));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(invalid("sample has non-finite values"));
    }
    let max = sample.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Ok(0.0);
    }
    let admissible = |c: f64| -> bool {
        let mut sum = CompensatedSum::default();
        for x in sample {
            let e = (x.abs() / c).powf(alpha);
            if e > 700.0 {
                return false;
            }
            sum.add(e.exp());
        }
        sum.value() / sample.len() as f64 <= 2.0
    };
    // Every term is at most 2 once c ≥ max|x| / (ln 2)^{1/α}.
    let mut hi = max / std::f64::consts::LN_2.powf(1.0 / alpha);
    let mut lo = 0.0;
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if admissible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// ψ₂ of a law estimated from `samples` draws.
pub fn psi2_of_law(law: ScalarLaw, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, 0);
    let xs: Vec<f64> = (0..samples).map(|_| law.sample(&mut rng)).collect();
    psi2_estimate(&xs)
}

/// Moment-growth proxy `max_{1≤p≤16} ‖x‖_p / √p`, a cross-check for the ψ₂ estimate.
pub fn moment_proxy(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(invalid("empty sample"));
    }
    let n = sample.len() as f64;
    Ok((1..=16)
        .map(|p| {
            let pf = p as f64;
            let m: CompensatedSum = sample.iter().map(|x| x.abs().powf(pf)).collect();
            (m.value() / n).powf(1.0 / pf) / pf.sqrt()
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Vector;
    use crate::rng::random_unit;

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_matrix(ScalarLaw::Gaussian, 2, 3, 7).unwrap();
        let b = sample_matrix(ScalarLaw::Gaussian, 2, 3, 7).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let c = sample_matrix(ScalarLaw::Gaussian, 2, 3, 8).unwrap();
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn rademacher_entries_are_signs() {
        let a = sample_matrix(ScalarLaw::Rademacher, 1000, 1, 3).unwrap();
        assert!(a.matrix().iter().all(|v| *v == 1.0 || *v == -1.0));
    }

    #[test]
    fn gaussian_variance() {
        let a = sample_matrix(ScalarLaw::Gaussian, 10_000, 1, 11).unwrap();
        let var = a.matrix().iter().map(|v| v * v).sum::<f64>() / 10_000.0;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn resource_cap_is_a_config_error() {
        assert!(matches!(sample_matrix(ScalarLaw::Gaussian, 100_000, 100_000, 0), Err(Error::Config(_))));
        assert!(sample_matrix(ScalarLaw::Gaussian, 0, 3, 0).is_err());
    }

    #[test]
    fn laws_are_standardized() {
        let s = 100_000usize;
        for law in ScalarLaw::ALL {
            let mut rng = stream_rng(5, 0);
            let xs: Vec<f64> = (0..s).map(|_| law.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / s as f64;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / s as f64 - mean * mean;
            assert!(mean.abs() < 4.0 / (s as f64).sqrt(), "{law} mean {mean}");
            assert!((var - 1.0).abs() < 8.0 / (s as f64).sqrt(), "{law} var {var}");
        }
    }

    #[test]
    fn rows_are_isotropic() {
        let n = 32;
        for law in ScalarLaw::ALL {
            let x = sample_matrix(law, 10_000, n, 21).unwrap();
            let mut rng = stream_rng(22, 0);
            for _ in 0..50 {
                let t = random_unit(&mut rng, n);
                let proj = x.matrix() * &t;
                let m = proj.norm_squared() / 10_000.0;
                assert!((m - 1.0).abs() < 0.1, "{law}: {m}");
            }
        }
    }

    #[test]
    fn psi2_of_known_laws() {
        let g = psi2_of_law(ScalarLaw::Gaussian, 100_000, 1).unwrap();
        assert!((1.55..=1.72).contains(&g), "{g}");
        let r = psi2_of_law(ScalarLaw::Rademacher, 10_000, 1).unwrap();
        assert!((r - 1.0 / std::f64::consts::LN_2.sqrt()).abs() < 2e-3 * r, "{r}");
        let u = psi2_of_law(ScalarLaw::UniformScaled, 200_000, 1).unwrap();
        assert!((u - ScalarLaw::UniformScaled.declared_psi2()).abs() < 0.02, "{u}");
        assert_eq!(psi2_estimate(&[0.0; 1000]).unwrap(), 0.0);
        assert!(psi2_estimate(&[]).is_err());
    }

    #[test]
    fn declared_uniform_psi2_solves_the_defining_equation() {
        // E exp(ξ²/c²) for ξ uniform on [−√3, √3], by the midpoint rule.
        let c = ScalarLaw::UniformScaled.declared_psi2();
        let m = 200_000;
        let h = 3f64.sqrt() / m as f64;
        let integral: f64 = (0..m).map(|i| ((i as f64 + 0.5) * h / c).powi(2).exp()).sum::<f64>() * h / 3f64.sqrt();
        assert!((integral - 2.0).abs() < 1e-4, "{integral}");
    }

    #[test]
    fn psi_estimate_handles_huge_ratios() {
        let mut xs = vec![0.0; 999];
        xs.push(1e6);
        let c = psi2_estimate(&xs).unwrap();
        let mean: f64 = xs.iter().map(|x| (x / c).powi(2).exp()).sum::<f64>() / xs.len() as f64;
        assert!(mean <= 2.0);
    }

    #[test]
    fn moment_proxy_of_signs() {
        assert!((moment_proxy(&[1.0, -1.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn restriction_commutes_with_projection() {
        let gamma = sample_matrix(ScalarLaw::Gaussian, 6, 10, 4).unwrap();
        let t = ConvexBody::l1_ball(10, 1.0).unwrap();
        let rows = [1usize, 4];
        let a = coordinate_restrict(&project_body(&t, &gamma).unwrap(), &rows).unwrap();
        let b = project_body(&t, &gamma.select_rows(&rows).unwrap()).unwrap();
        let mut rng = stream_rng(9, 0);
        for _ in 0..20 {
            let z = random_unit(&mut rng, 2);
            let mut padded = Vector::zeros(6);
            padded[1] = z[0];
            padded[4] = z[1];
            let full = project_body(&t, &gamma).unwrap().support(&padded).unwrap();
            let sa = a.support(&z).unwrap();
            let sb = b.support(&z).unwrap();
            assert!((sa - sb).abs() <= 1e-12 * (1.0 + sa));
            assert!((sa - full).abs() <= 1e-12 * (1.0 + sa));
        }
    }
}
