//! Euclidean projections and the support function of `K ∩ rB₂`.

use super::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::{norm1, Vector};

const DYKSTRA_MAX_ITER: usize = 20_000;

impl ConvexBody {
    /// Nearest point of the body in the Euclidean norm.
    pub fn project(&self, p: &Vector) -> Result<Vector> {
        self.check_vector(p)?;
        self.project_unchecked(p).ok_or_else(|| {
            Error::Unsupported(format!("Euclidean projection onto {} is not available", self.kind_name()))
        })
    }

    pub(crate) fn project_unchecked(&self, p: &Vector) -> Option<Vector> {
        match &self.kind {
            BodyKind::EuclideanBall { radius } => Some(project_ball(p, *radius)),
            BodyKind::L1Ball { radius } => Some(project_l1(p, *radius)),
            BodyKind::CubeBall { radius } => Some(p.map(|v| v.clamp(-radius, *radius))),
            BodyKind::Ellipsoid { semi_axes } => Some(project_ellipsoid(p, semi_axes)),
            BodyKind::IntersectionL1L2 { rho } => {
                Some(dykstra(p, |x| project_l1(x, 1.0), |x| project_ball(x, *rho), 1e-13))
            }
            BodyKind::CapIntersection { base, radius } => {
                let r = *radius;
                Some(dykstra(p, |x| base.project_unchecked(x).expect("cap base is projectable"), |x| project_ball(x, r), 1e-13))
            }
            BodyKind::SymmetricPolytope { .. } | BodyKind::LinearImage { .. } => None,
        }
    }
}

pub(crate) fn project_ball(p: &Vector, radius: f64) -> Vector {
    let norm = p.norm();
    if norm <= radius {
        p.clone()
    } else {
        p * (radius / norm)
    }
}

/// Sort-based projection onto `radius·B₁`.
pub(crate) fn project_l1(p: &Vector, radius: f64) -> Vector {
    if norm1(p) <= radius {
        return p.clone();
    }
    if radius == 0.0 {
        return Vector::zeros(p.len());
    }
    let mut u: Vec<f64> = p.iter().map(|v| v.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - radius) / (j + 1) as f64;
        if uj > t {
            theta = t;
        } else {
            break;
        }
    }
    p.map(|v| v.signum() * (v.abs() - theta).max(0.0))
}

/// Projection onto `{t : Σ (t_i/a_i)² ≤ 1}` by bisection on the KKT multiplier.
pub(crate) fn project_ellipsoid(p: &Vector, a: &Vector) -> Vector {
    let gauge = |lambda: f64| -> f64 {
        p.iter().zip(a.iter()).map(|(pi, ai)| (ai * pi / (ai * ai + lambda)).powi(2)).sum::<f64>()
    };
    if gauge(0.0) <= 1.0 {
        return p.clone();
    }
    let a_max = a.iter().fold(0.0f64, |m, v| m.max(*v));
    let (mut lo, mut hi) = (0.0, a_max * p.norm());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gauge(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Vector::from_fn(p.len(), |i, _| a[i] * a[i] * p[i] / (a[i] * a[i] + hi))
}

/// Dykstra's alternating projections onto the intersection of two convex sets.
pub fn dykstra<A, B>(p: &Vector, proj_a: A, proj_b: B, tol: f64) -> Vector
where
    A: Fn(&Vector) -> Vector,
    B: Fn(&Vector) -> Vector,
{
    let n = p.len();
    let mut x = p.clone();
    let mut pa = Vector::zeros(n);
    let mut qb = Vector::zeros(n);
    let scale = 1.0 + p.norm();
    for _ in 0..DYKSTRA_MAX_ITER {
        let y = proj_a(&(&x + &pa));
        pa = &x + &pa - &y;
        let next = proj_b(&(&y + &qb));
        qb = &y + &qb - &next;
        let moved = (&next - &x).norm() + (&next - &y).norm();
        x = next;
        if moved <= tol * scale {
            break;
        }
    }
    x
}

/// Support of `base ∩ rB₂` at `x`.
///
/// Uses the dual `h(x) = min_y h_base(y) + r‖x − y‖`. The maximizer is `t(s) = P_base(s·x)`
/// for the multiplier `s ≥ 0` at which `‖t(s)‖ = r`, and `‖t(s)‖` is nondecreasing in `s`,
/// so `s` is found by bisection. The returned point always lies in the body.
pub(crate) fn cap_support_point(base: &ConvexBody, r: f64, x: &Vector) -> (f64, Vector) {
    let n = x.len();
    let xn = x.norm();
    if xn == 0.0 || r == 0.0 {
        return (0.0, Vector::zeros(n));
    }
    let (h_base, t_base) = base.support_and_point(x);
    if t_base.norm() <= r {
        return (h_base, t_base);
    }
    let project = |s: f64| base.project_unchecked(&(x * s)).expect("cap base is projectable");
    let mut lo = 0.0;
    let mut hi = r / xn;
    let mut t_hi = project(hi);
    let mut guard = 0;
    while t_hi.norm() < r && guard < 200 {
        lo = hi;
        hi *= 2.0;
        t_hi = project(hi);
        guard += 1;
    }
    let mut t_lo = if lo == 0.0 { Vector::zeros(n) } else { project(lo) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 1e-15 * hi {
            break;
        }
        let t = project(mid);
        if t.norm() <= r {
            lo = mid;
            t_lo = t;
        } else {
            hi = mid;
        }
    }
    // Between t_lo (inside rB₂) and t_hi (outside) the segment crosses the sphere; take the
    // crossing point, which lies in base by convexity and in rB₂ by construction.
    let d = &t_hi - &t_lo;
    let (a2, b1, c0) = (d.norm_squared(), t_lo.dot(&d), t_lo.norm_squared() - r * r);
    let lambda = if a2 > 0.0 { ((-b1 + (b1 * b1 - a2 * c0).max(0.0).sqrt()) / a2).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = &t_lo + d * lambda;
    let tn = t.norm();
    if tn > r {
        t *= r / tn;
    }
    let value = t.dot(x).max(t_lo.dot(x));
    if t_lo.dot(x) > t.dot(x) {
        return (value, t_lo);
    }
    (value, t)
}
