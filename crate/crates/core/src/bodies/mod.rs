//! Centrally symmetric convex bodies described by their support functions.
//!
//! `support(x) = sup_{t∈K} ⟨t,x⟩` is the norm whose unit ball is the polar
//! body K°; it is the only view of the polar the crate exposes.

mod descriptor;
mod membership;
mod projection;

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::linalg::{argmax_abs, norm1, norm_inf, sign_vector, top_singular, unit, Matrix, Vector};
use crate::sphere::{maximize_convex, SphereSearch};

pub use descriptor::{load_matrix_csv, write_matrix_csv, BodyDescriptor, MatrixSource};
pub use membership::Membership;
pub use projection::dykstra;

#[derive(Debug, Clone)]
pub enum BodyKind {
    /// `radius · B₂ⁿ`.
    EuclideanBall { radius: f64 },
    /// `radius · B₁ⁿ`.
    L1Ball { radius: f64 },
    /// `radius · B∞ⁿ`.
    CubeBall { radius: f64 },
    /// Axis-aligned ellipsoid `{t : Σ (t_i/a_i)² ≤ 1}`.
    Ellipsoid { semi_axes: Vector },
    /// `conv(±v_j)`, one vertex per row.
    SymmetricPolytope { vertices: Arc<Matrix> },
    /// `B₁ⁿ ∩ ρB₂ⁿ`.
    IntersectionL1L2 { rho: f64 },
    /// `A·K` for an m×n matrix `A` and a body `K ⊂ Rⁿ`.
    LinearImage { base: Arc<ConvexBody>, matrix: Arc<Matrix> },
    /// `K ∩ r B₂ⁿ`; the base must admit a cheap Euclidean projection.
    CapIntersection { base: Arc<ConvexBody>, radius: f64 },
}

#[derive(Debug, Clone)]
pub struct ConvexBody {
    kind: BodyKind,
    dim: usize,
}

/// `sup_{t∈K} ‖t‖₂` together with a point attaining the reported value.
/// When `exact` is false the value is a lower bound from a sphere search.
#[derive(Debug, Clone)]
pub struct RadiusEstimate {
    pub value: f64,
    pub exact: bool,
    pub point: Vector,
}

fn check_scalar(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(invalid("dimension must be positive"))
    } else {
        Ok(())
    }
}

impl ConvexBody {
    pub fn euclidean_ball(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        check_scalar("radius", radius)?;
        Ok(ConvexBody { kind: BodyKind::EuclideanBall { radius }, dim })
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        check_scalar("radius", radius)?;
        Ok(ConvexBody { kind: BodyKind::L1Ball { radius }, dim })
    }

    pub fn cube(dim: usize, radius: f64) -> Result<Self> {
        check_dim(dim)?;
        check_scalar("radius", radius)?;
        Ok(ConvexBody { kind: BodyKind::CubeBall { radius }, dim })
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        check_dim(semi_axes.len())?;
        if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(invalid("ellipsoid semi-axes must be finite and positive"));
        }
        let dim = semi_axes.len();
        Ok(ConvexBody { kind: BodyKind::Ellipsoid { semi_axes: Vector::from_vec(semi_axes) }, dim })
    }

    /// `conv(±rows)`.
    pub fn polytope(vertices: Matrix) -> Result<Self> {
        if vertices.nrows() == 0 {
            return Err(invalid("polytope needs at least one vertex"));
        }
        check_dim(vertices.ncols())?;
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(invalid("polytope vertices must be finite"));
        }
        let dim = vertices.ncols();
        Ok(ConvexBody { kind: BodyKind::SymmetricPolytope { vertices: Arc::new(vertices) }, dim })
    }

    pub fn intersection_l1_l2(dim: usize, rho: f64) -> Result<Self> {
        check_dim(dim)?;
        check_scalar("rho", rho)?;
        if rho == 0.0 {
            return Err(invalid("rho must be positive"));
        }
        Ok(ConvexBody { kind: BodyKind::IntersectionL1L2 { rho }, dim })
    }

    /// `A·base`. Nested images are folded into a single matrix product.
    pub fn linear_image(base: ConvexBody, matrix: Matrix) -> Result<Self> {
        Self::linear_image_shared(Arc::new(base), Arc::new(matrix))
    }

    pub fn linear_image_shared(base: Arc<ConvexBody>, matrix: Arc<Matrix>) -> Result<Self> {
        if matrix.ncols() != base.dim {
            return Err(Error::DimensionMismatch { expected: base.dim, got: matrix.ncols() });
        }
        check_dim(matrix.nrows())?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix entries must be finite"));
        }
        let dim = matrix.nrows();
        if let BodyKind::LinearImage { base: inner, matrix: inner_matrix } = &base.kind {
            let folded = matrix.as_ref() * inner_matrix.as_ref();
            return Ok(ConvexBody {
                kind: BodyKind::LinearImage { base: inner.clone(), matrix: Arc::new(folded) },
                dim,
            });
        }
        Ok(ConvexBody { kind: BodyKind::LinearImage { base, matrix }, dim })
    }

    /// `base ∩ r B₂`. Only bases with a cheap Euclidean projection are admitted.
    pub fn cap(base: ConvexBody, radius: f64) -> Result<Self> {
        check_scalar("cap radius", radius)?;
        if !base.has_cheap_projection() {
            return Err(Error::Unsupported(format!(
                "cap intersection needs a base with cheap Euclidean projection, got {}",
                base.kind_name()
            )));
        }
        let dim = base.dim;
        Ok(ConvexBody { kind: BodyKind::CapIntersection { base: Arc::new(base), radius }, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            BodyKind::EuclideanBall { .. } => "euclidean_ball",
            BodyKind::L1Ball { .. } => "l1_ball",
            BodyKind::CubeBall { .. } => "cube",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::SymmetricPolytope { .. } => "polytope",
            BodyKind::IntersectionL1L2 { .. } => "intersection_l1_l2",
            BodyKind::LinearImage { .. } => "linear_image",
            BodyKind::CapIntersection { .. } => "cap",
        }
    }

    pub(crate) fn check_vector(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("vector has non-finite entries"));
        }
        Ok(())
    }

    /// `sup_{t∈K} ⟨t,x⟩`.
    pub fn support(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        Ok(self.support_value(x))
    }

    /// Support value and a maximizer. For `x = 0` the maximizer is the zero vector.
    pub fn support_point(&self, x: &Vector) -> Result<(f64, Vector)> {
        self.check_vector(x)?;
        Ok(self.support_and_point(x))
    }

    /// A point `t ∈ K` with `⟨t,d⟩ = support(d)`; ties go to the lowest coordinate index.
    pub fn extreme_point(&self, direction: &Vector) -> Result<Vector> {
        self.check_vector(direction)?;
        if direction.iter().all(|v| *v == 0.0) {
            return Err(invalid("extreme_point needs a nonzero direction"));
        }
        Ok(self.support_and_point(direction).1)
    }

    /// Unchecked support value.
    pub(crate) fn support_value(&self, x: &Vector) -> f64 {
        match &self.kind {
            BodyKind::EuclideanBall { radius } => radius * x.norm(),
            BodyKind::L1Ball { radius } => radius * norm_inf(x),
            BodyKind::CubeBall { radius } => radius * norm1(x),
            BodyKind::Ellipsoid { semi_axes } => x.component_mul(semi_axes).norm(),
            BodyKind::SymmetricPolytope { vertices } => norm_inf(&(vertices.as_ref() * x)),
            BodyKind::IntersectionL1L2 { rho } => l1l2_support(x, *rho),
            BodyKind::LinearImage { base, matrix } => base.support_value(&matrix.tr_mul(x)),
            BodyKind::CapIntersection { base, radius } => projection::cap_support_point(base, *radius, x).0,
        }
    }

    /// Unchecked support value with a maximizer.
    pub(crate) fn support_and_point(&self, x: &Vector) -> (f64, Vector) {
        let n = self.dim;
        if x.iter().all(|v| *v == 0.0) {
            return (0.0, Vector::zeros(n));
        }
        match &self.kind {
            BodyKind::EuclideanBall { radius } => {
                let norm = x.norm();
                (radius * norm, x * (radius / norm))
            }
            BodyKind::L1Ball { radius } => {
                let j = argmax_abs(x.as_slice());
                let mut t = Vector::zeros(n);
                t[j] = radius * x[j].signum();
                (radius * x[j].abs(), t)
            }
            BodyKind::CubeBall { radius } => (radius * norm1(x), sign_vector(x) * *radius),
            BodyKind::Ellipsoid { semi_axes } => {
                let ax = x.component_mul(semi_axes);
                let h = ax.norm();
                (h, ax.component_mul(semi_axes) / h)
            }
            BodyKind::SymmetricPolytope { vertices } => {
                let vals = vertices.as_ref() * x;
                let j = argmax_abs(vals.as_slice());
                let s = if vals[j] < 0.0 { -1.0 } else { 1.0 };
                (vals[j].abs(), vertices.row(j).transpose() * s)
            }
            BodyKind::IntersectionL1L2 { rho } => l1l2_support_point(x, *rho),
            BodyKind::LinearImage { base, matrix } => {
                let (h, t) = base.support_and_point(&matrix.tr_mul(x));
                (h, matrix.as_ref() * t)
            }
            BodyKind::CapIntersection { base, radius } => projection::cap_support_point(base, *radius, x),
        }
    }

    /// Euclidean radius with the default sup-search budget (64 restarts, seed 0).
    pub fn euclidean_radius(&self) -> RadiusEstimate {
        self.euclidean_radius_with(&SphereSearch::sup_default(0))
    }

    pub fn euclidean_radius_with(&self, search: &SphereSearch) -> RadiusEstimate {
        if let Some(r) = self.exact_radius() {
            return r;
        }
        let probes: Vec<Vector> = if self.dim <= 64 { (0..self.dim).map(|i| unit(self.dim, i)).collect() } else { Vec::new() };
        let opt = maximize_convex(self.dim, search, &probes, |z| self.support_and_point(z));
        let point = opt.gradient;
        RadiusEstimate { value: point.norm(), exact: false, point }
    }

    fn exact_radius(&self) -> Option<RadiusEstimate> {
        let n = self.dim;
        let exact = |value: f64, point: Vector| Some(RadiusEstimate { value, exact: true, point });
        match &self.kind {
            BodyKind::EuclideanBall { radius } | BodyKind::L1Ball { radius } => exact(*radius, unit(n, 0) * *radius),
            BodyKind::CubeBall { radius } => exact(radius * (n as f64).sqrt(), Vector::from_element(n, *radius)),
            BodyKind::Ellipsoid { semi_axes } => {
                let j = argmax_abs(semi_axes.as_slice());
                exact(semi_axes[j], unit(n, j) * semi_axes[j])
            }
            BodyKind::SymmetricPolytope { vertices } => {
                let j = argmax_abs(&vertices.row_iter().map(|r| r.norm()).collect::<Vec<_>>());
                let v = vertices.row(j).transpose();
                exact(v.norm(), v)
            }
            BodyKind::IntersectionL1L2 { rho } => {
                let r = rho.min(1.0);
                exact(r, unit(n, 0) * r)
            }
            BodyKind::CapIntersection { base, radius } => {
                let b = base.exact_radius()?;
                if b.value <= *radius {
                    Some(b)
                } else {
                    let scale = radius / b.value;
                    exact(*radius, b.point * scale)
                }
            }
            BodyKind::LinearImage { base, matrix } => image_exact_radius(base, matrix),
        }
    }

    /// A rigorous upper bound on the Euclidean radius.
    pub fn radius_upper_bound(&self) -> f64 {
        if let Some(r) = self.exact_radius() {
            return r.value;
        }
        match &self.kind {
            BodyKind::LinearImage { base, matrix } => base.radius_upper_bound() * top_singular(matrix).0,
            BodyKind::CapIntersection { base, radius } => base.radius_upper_bound().min(*radius),
            _ => f64::INFINITY,
        }
    }

    /// `Q_I K`: the coordinate projection onto the (sorted, distinct, 0-based) index set.
    pub fn restrict_coordinates(&self, indices: &[usize]) -> Result<ConvexBody> {
        if indices.is_empty() {
            return Err(invalid("index set must be nonempty"));
        }
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(invalid("index set must be sorted and duplicate-free"));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= self.dim {
                return Err(invalid(format!("index {last} out of range for dimension {}", self.dim)));
            }
        }
        let k = indices.len();
        let body = match &self.kind {
            BodyKind::EuclideanBall { radius } => ConvexBody::euclidean_ball(k, *radius)?,
            BodyKind::L1Ball { radius } => ConvexBody::l1_ball(k, *radius)?,
            BodyKind::CubeBall { radius } => ConvexBody::cube(k, *radius)?,
            BodyKind::IntersectionL1L2 { rho } => ConvexBody::intersection_l1_l2(k, *rho)?,
            BodyKind::Ellipsoid { semi_axes } => ConvexBody::ellipsoid(indices.iter().map(|&i| semi_axes[i]).collect())?,
            BodyKind::SymmetricPolytope { vertices } => {
                ConvexBody::polytope(Matrix::from_fn(vertices.nrows(), k, |r, c| vertices[(r, indices[c])]))?
            }
            BodyKind::LinearImage { base, matrix } => ConvexBody::linear_image_shared(
                base.clone(),
                Arc::new(crate::linalg::select_rows(matrix, indices)),
            )?,
            BodyKind::CapIntersection { .. } => {
                let sel = Matrix::from_fn(k, self.dim, |r, c| if indices[r] == c { 1.0 } else { 0.0 });
                ConvexBody::linear_image(self.clone(), sel)?
            }
        };
        Ok(body)
    }

    /// `λK` for `λ ≥ 0`.
    pub fn scaled(&self, lambda: f64) -> Result<ConvexBody> {
        check_scalar("scale", lambda)?;
        let body = match &self.kind {
            BodyKind::EuclideanBall { radius } => ConvexBody::euclidean_ball(self.dim, radius * lambda)?,
            BodyKind::L1Ball { radius } => ConvexBody::l1_ball(self.dim, radius * lambda)?,
            BodyKind::CubeBall { radius } => ConvexBody::cube(self.dim, radius * lambda)?,
            BodyKind::Ellipsoid { semi_axes } if lambda > 0.0 => {
                ConvexBody::ellipsoid((semi_axes * lambda).iter().copied().collect())?
            }
            BodyKind::SymmetricPolytope { vertices } => ConvexBody::polytope(vertices.as_ref() * lambda)?,
            BodyKind::LinearImage { base, matrix } => {
                ConvexBody::linear_image_shared(base.clone(), Arc::new(matrix.as_ref() * lambda))?
            }
            BodyKind::CapIntersection { base, radius } if lambda > 0.0 => {
                ConvexBody::cap(base.scaled(lambda)?, radius * lambda)?
            }
            _ => ConvexBody::linear_image(self.clone(), Matrix::identity(self.dim, self.dim) * lambda)?,
        };
        Ok(body)
    }

    pub(crate) fn has_cheap_projection(&self) -> bool {
        matches!(
            self.kind,
            BodyKind::EuclideanBall { .. } | BodyKind::L1Ball { .. } | BodyKind::CubeBall { .. } | BodyKind::Ellipsoid { .. }
        )
    }
}

fn image_exact_radius(base: &ConvexBody, a: &Matrix) -> Option<RadiusEstimate> {
    let exact = |value: f64, point: Vector| Some(RadiusEstimate { value, exact: true, point });
    let n = base.dim;
    match &base.kind {
        BodyKind::EuclideanBall { radius } => {
            let (s, v) = top_singular(a);
            exact(radius * s, a * v * *radius)
        }
        BodyKind::Ellipsoid { semi_axes } => {
            let scaled = a * Matrix::from_diagonal(semi_axes);
            let (s, v) = top_singular(&scaled);
            exact(s, scaled * v)
        }
        BodyKind::L1Ball { radius } => {
            let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
            let j = argmax_abs(&norms);
            exact(radius * norms[j], a.column(j) * *radius)
        }
        BodyKind::IntersectionL1L2 { rho } if *rho >= 1.0 => {
            image_exact_radius(&ConvexBody { kind: BodyKind::L1Ball { radius: 1.0 }, dim: n }, a)
        }
        BodyKind::IntersectionL1L2 { rho } if rho * (n as f64).sqrt() <= 1.0 => {
            image_exact_radius(&ConvexBody { kind: BodyKind::EuclideanBall { radius: *rho }, dim: n }, a)
        }
        BodyKind::SymmetricPolytope { vertices } => {
            let images = a * vertices.transpose();
            let norms: Vec<f64> = images.column_iter().map(|c| c.norm()).collect();
            let j = argmax_abs(&norms);
            exact(norms[j], images.column(j).into_owned())
        }
        _ => None,
    }
}

/// Absolute values sorted in decreasing order.
fn sorted_abs_desc(x: &Vector) -> Vec<f64> {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_by(|p, q| q.total_cmp(p));
    a
}

/// θ + ρ‖(|x| − θ)₊‖₂ for the sorted absolute values.
fn l1l2_objective(sorted: &[f64], rho: f64, theta: f64) -> f64 {
    let mut ss = 0.0;
    for &a in sorted {
        if a <= theta {
            break;
        }
        ss += (a - theta) * (a - theta);
    }
    theta + rho * ss.sqrt()
}

/// Golden-section minimization of the convex map θ ↦ θ + ρ‖(|x| − θ)₊‖₂ on [0, ‖x‖∞].
fn l1l2_theta(sorted: &[f64], rho: f64) -> (f64, f64) {
    const TOL: f64 = 1e-10;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |t: f64| l1l2_objective(sorted, rho, t);
    let (mut a, mut b) = (0.0, sorted[0]);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut iter = 0;
    while b - a > TOL && iter < 400 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for (t, v) in [(c, fc), (d, fd), (0.0, f(0.0)), (sorted[0], f(sorted[0]))] {
        if v < best.1 {
            best = (t, v);
        }
    }
    best
}

/// The objective is flat near its minimum, so comparing values only pins θ* to about √ε.
/// The maximizer needs θ* to full precision; bisect on the sign of the derivative
/// `1 − ρ‖(|x| − θ)₊‖₁ / ‖(|x| − θ)₊‖₂`, which is nondecreasing.
fn l1l2_refine_theta(sorted: &[f64], rho: f64, guess: f64) -> f64 {
    let slope = |theta: f64| {
        let (mut s1, mut s2) = (0.0, 0.0);
        for &a in sorted {
            if a <= theta {
                break;
            }
            s1 += a - theta;
            s2 += (a - theta) * (a - theta);
        }
        if s2 == 0.0 {
            1.0
        } else {
            1.0 - rho * s1 / s2.sqrt()
        }
    };
    let width = 1e-6 * sorted[0];
    let (mut lo, mut hi) = ((guess - width).max(0.0), (guess + width).min(sorted[0]));
    if slope(lo) > 0.0 {
        lo = 0.0;
    }
    if slope(hi) < 0.0 {
        hi = sorted[0];
    }
    if slope(lo) >= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Minimizer of θ ↦ θ + ρ‖(|x| − θ)₊‖₂ and its value. While the top `j` entries exceed θ the
/// stationarity condition `ρ(S₁ − jθ) = ‖(|x| − θ)₊‖₂` is a quadratic in θ, so the root is
/// found exactly on the piece where the derivative changes sign. Falls back to a numerical
/// search if rounding hides the sign change.
fn l1l2_optimal_theta(sorted: &[f64], rho: f64) -> (f64, f64) {
    match l1l2_exact_theta(sorted, rho) {
        Some(theta) => (theta, l1l2_objective(sorted, rho, theta)),
        None => {
            let (guess, _) = l1l2_theta(sorted, rho);
            let theta = l1l2_refine_theta(sorted, rho, guess);
            (theta, l1l2_objective(sorted, rho, theta))
        }
    }
}

fn l1l2_exact_theta(sorted: &[f64], rho: f64) -> Option<f64> {
    let n = sorted.len();
    let total1: f64 = sorted.iter().sum();
    let total2: f64 = sorted.iter().map(|a| a * a).sum();
    if total2 == 0.0 || 1.0 - rho * total1 / total2.sqrt() >= 0.0 {
        return Some(0.0);
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for j in 1..=n {
        s1 += sorted[j - 1];
        s2 += sorted[j - 1] * sorted[j - 1];
        let upper = sorted[j - 1];
        let lower = if j < n { sorted[j] } else { 0.0 };
        if upper <= lower {
            continue;
        }
        let jf = j as f64;
        let slope = |theta: f64| {
            let q = (s2 - 2.0 * theta * s1 + jf * theta * theta).max(0.0);
            if q == 0.0 {
                1.0
            } else {
                1.0 - rho * (s1 - jf * theta) / q.sqrt()
            }
        };
        if slope(lower) >= 0.0 || slope(upper) < 0.0 {
            continue;
        }
        let a = rho * rho * jf * jf - jf;
        let b = 2.0 * s1 * (1.0 - rho * rho * jf);
        let c = rho * rho * s1 * s1 - s2;
        let roots = if a.abs() <= 1e-14 * jf * jf {
            vec![-c / b]
        } else {
            let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
            let q = -0.5 * (b + b.signum() * disc);
            vec![q / a, if q != 0.0 { c / q } else { f64::NAN }]
        };
        let pad = 1e-12 * upper;
        return roots
            .into_iter()
            .filter(|r| r.is_finite() && *r >= lower - pad && *r <= upper + pad)
            .map(|r| r.clamp(lower, upper))
            .min_by(|p, q| l1l2_objective(sorted, rho, *p).total_cmp(&l1l2_objective(sorted, rho, *q)));
    }
    None
}

fn l1l2_support(x: &Vector, rho: f64) -> f64 {
    let n = x.len() as f64;
    if rho >= 1.0 {
        return norm_inf(x);
    }
    if rho * n.sqrt() <= 1.0 {
        return rho * x.norm();
    }
    let sorted = sorted_abs_desc(x);
    if sorted[0] == 0.0 {
        return 0.0;
    }
    l1l2_optimal_theta(&sorted, rho).1
}

/// Maximizer over B₁ ∩ ρB₂. Candidates are the rescaled soft-threshold of x at θ*, at θ = 0,
/// and the signed uniform vectors on the top-j coordinates; each is scaled into the body and
/// the best inner product wins.
fn l1l2_support_point(x: &Vector, rho: f64) -> (f64, Vector) {
    let n = x.len();
    if rho >= 1.0 {
        let j = argmax_abs(x.as_slice());
        let mut t = Vector::zeros(n);
        t[j] = x[j].signum();
        return (x[j].abs(), t);
    }
    if rho * (n as f64).sqrt() <= 1.0 {
        let norm = x.norm();
        return (rho * norm, x * (rho / norm));
    }
    let sorted = sorted_abs_desc(x);
    let (theta, h) = l1l2_optimal_theta(&sorted, rho);

    let fit = |r: Vector| -> Option<(f64, Vector)> {
        let scale = norm1(&r).max(r.norm() / rho);
        if scale > 0.0 {
            let t = r / scale;
            Some((t.dot(x), t))
        } else {
            None
        }
    };
    let soft = |th: f64| x.map(|v| v.signum() * (v.abs() - th).max(0.0));

    let mut best: Option<(f64, Vector)> = None;
    let mut consider = |cand: Option<(f64, Vector)>| {
        if let Some((v, t)) = cand {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, t));
            }
        }
    };
    consider(fit(soft(theta)));
    consider(fit(x.clone()));

    // Uniform vectors on the top-j coordinates (ties broken by lower index).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    let mut prefix = 0.0;
    let mut best_j = (f64::NEG_INFINITY, 0usize);
    for (j, &i) in order.iter().enumerate() {
        prefix += x[i].abs();
        let size = (j + 1) as f64;
        let v = prefix / size * (rho * size.sqrt()).min(1.0);
        if v > best_j.0 {
            best_j = (v, j + 1);
        }
    }
    let size = best_j.1 as f64;
    let weight = (rho * size.sqrt()).min(1.0) / size;
    let mut t = Vector::zeros(n);
    for &i in &order[..best_j.1] {
        t[i] = x[i].signum() * weight;
    }
    consider(Some((t.dot(x), t)));

    let (_, t) = best.expect("at least one candidate");
    (h, t)
}

#[cfg(test)]
mod tests;
