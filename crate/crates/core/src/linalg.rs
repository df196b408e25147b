//! Small dense helpers shared by the body, width and inclusion code.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub fn norm1(x: &Vector) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub fn norm_inf(x: &Vector) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Index of the largest `|x_i|`; the lowest index wins ties.
pub fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > best_val {
            best_val = v.abs();
            best = i;
        }
    }
    best
}

pub fn signum0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn sign_vector(x: &Vector) -> Vector {
    x.map(signum0)
}

pub fn unit(dim: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(dim);
    e[i] = 1.0;
    e
}

pub fn all_ones_unit(dim: usize) -> Vector {
    Vector::from_element(dim, 1.0 / (dim as f64).sqrt())
}

/// Normalizes `x` in place; returns false (and leaves `x` untouched) for a zero vector.
pub fn normalize_mut(x: &mut Vector) -> bool {
    let n = x.norm();
    if n > 0.0 && n.is_finite() {
        *x /= n;
        true
    } else {
        false
    }
}

/// Euclidean norm of the `k` largest entries of `|v|`.
pub fn top_k_norm(v: &[f64], k: usize) -> f64 {
    let mut sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let k = k.min(sq.len());
    if k == 0 {
        return 0.0;
    }
    if k < sq.len() {
        sq.select_nth_unstable_by(k - 1, |a, b| b.total_cmp(a));
    }
    sq[..k].iter().sum::<f64>().sqrt()
}

/// Indices of the `k` largest `|v_i|`, sorted ascending; ties go to the lower index.
pub fn top_k_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    idx.truncate(k.min(v.len()));
    idx.sort_unstable();
    idx
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean and standard error of the mean, both via compensated sums.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().copied().collect::<CompensatedSum>().value() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .collect::<CompensatedSum>()
        .value();
    let sd = (ss / (n - 1) as f64).sqrt();
    (mean, sd / (n as f64).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn canonical_sign(mut v: Vector) -> Vector {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-14) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
    v
}

fn extreme_eigen(gram: Matrix, largest: bool) -> (f64, Vector) {
    let eig = SymmetricEigen::new(gram);
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        let better = if largest {
            eig.eigenvalues[i] > eig.eigenvalues[best]
        } else {
            eig.eigenvalues[i] < eig.eigenvalues[best]
        };
        if better {
            best = i;
        }
    }
    let val = eig.eigenvalues[best].max(0.0);
    (val, canonical_sign(eig.eigenvectors.column(best).into_owned()))
}

/// Largest singular value of `a` (m×n) together with a unit right singular vector in Rⁿ.
pub fn top_singular(a: &Matrix) -> (f64, Vector) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (0.0, Vector::zeros(n));
    }
    if n <= m {
        let (lam, v) = extreme_eigen(a.tr_mul(a), true);
        (lam.sqrt(), v)
    } else {
        let (lam, u) = extreme_eigen(a * a.transpose(), true);
        let sigma = lam.sqrt();
        let mut v = a.tr_mul(&u);
        if !normalize_mut(&mut v) {
            v = unit(n, 0);
        }
        (sigma, v)
    }
}

/// `min_{‖z‖=1} ‖aᵀz‖` over z ∈ Rᵐ, with the minimizing z.
pub fn min_transpose_gain(a: &Matrix) -> (f64, Vector) {
    let m = a.nrows();
    if m == 0 {
        return (0.0, Vector::zeros(0));
    }
    let (lam, u) = extreme_eigen(a * a.transpose(), false);
    (lam.sqrt(), u)
}

/// Rows of `a` selected by `rows`, in the given order.
pub fn select_rows(a: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}

/// Serializes a `Vector` as a plain JSON array.
pub mod serde_vector {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
