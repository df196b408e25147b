//! Three-valued membership with separating directions.

use serde::{Deserialize, Serialize};

use super::{BodyKind, ConvexBody};
use crate::error::{invalid, Result};
use crate::linalg::{argmax_abs, norm1, sign_vector, unit, Vector};

const GILBERT_MAX_ITER: usize = 10_000;

/// Outcome of a membership query `p ∈ K` at absolute tolerance `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Membership {
    Inside,
    /// `⟨p, separator⟩ − support(separator) = violation > tol`.
    Outside {
        #[serde(with = "crate::linalg::serde_vector")]
        separator: Vector,
        violation: f64,
    },
    /// The separation search stopped with `distance ∈ [lower, lower + gap]` straddling `tol`.
    Inconclusive { gap: f64 },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside)
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Membership::Outside { .. })
    }
}

fn slack(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

impl ConvexBody {
    /// Decides `p ∈ K` up to `tol`: `p` counts as inside when `⟨p,z⟩ ≤ support(z) + tol`
    /// for every unit `z` (for norm balls the slack applies to the defining norm).
    pub fn membership(&self, p: &Vector, tol: f64) -> Result<Membership> {
        self.check_vector(p)?;
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(invalid("tolerance must be finite and nonnegative"));
        }
        Ok(self.membership_unchecked(p, tol))
    }

    fn outside(&self, p: &Vector, z: Vector) -> Membership {
        let violation = p.dot(&z) - self.support_value(&z);
        Membership::Outside { separator: z, violation }
    }

    pub(crate) fn membership_unchecked(&self, p: &Vector, tol: f64) -> Membership {
        let n = self.dim;
        match &self.kind {
            BodyKind::EuclideanBall { radius } => {
                let norm = p.norm();
                if norm <= radius + tol + slack(*radius) {
                    Membership::Inside
                } else {
                    self.outside(p, p / norm)
                }
            }
            BodyKind::L1Ball { radius } => {
                if norm1(p) <= radius + tol + slack(*radius) {
                    Membership::Inside
                } else {
                    self.outside(p, sign_vector(p))
                }
            }
            BodyKind::CubeBall { radius } => {
                let j = argmax_abs(p.as_slice());
                if p[j].abs() <= radius + tol + slack(*radius) {
                    Membership::Inside
                } else {
                    self.outside(p, unit(n, j) * p[j].signum())
                }
            }
            BodyKind::Ellipsoid { semi_axes } => {
                let gauge = p.component_div(semi_axes).norm();
                if gauge <= 1.0 + tol + slack(1.0) {
                    Membership::Inside
                } else {
                    let mut z = p.component_div(semi_axes).component_div(semi_axes);
                    z /= z.norm();
                    self.outside(p, z)
                }
            }
            BodyKind::IntersectionL1L2 { rho } => {
                let norm = p.norm();
                if norm1(p) > 1.0 + tol + slack(1.0) {
                    self.outside(p, sign_vector(p))
                } else if norm > rho + tol + slack(*rho) {
                    self.outside(p, p / norm)
                } else {
                    Membership::Inside
                }
            }
            BodyKind::CapIntersection { base, radius } => {
                let norm = p.norm();
                if norm > radius + tol + slack(*radius) {
                    return self.outside(p, p / norm);
                }
                match base.membership_unchecked(p, tol) {
                    Membership::Outside { separator, .. } => self.outside(p, separator),
                    other => other,
                }
            }
            BodyKind::SymmetricPolytope { .. } | BodyKind::LinearImage { .. } => self.gilbert(p, tol),
        }
    }

    /// Away-step Frank–Wolfe (Gilbert) minimization of `‖p − t‖` over `t ∈ K`. Every iterate
    /// certifies an upper bound `‖p − t‖` on the distance and the direction `z = (p − t)/‖p − t‖`
    /// a lower bound `⟨p,z⟩ − support(z)`. Away steps give linear convergence on polytopes,
    /// which matters for points on the boundary.
    fn gilbert(&self, p: &Vector, tol: f64) -> Membership {
        let inside_tol = tol.max(1e-9 * (1.0 + p.norm()));
        if p.norm() <= inside_tol {
            return Membership::Inside;
        }
        let mut atoms: Vec<Vector> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut t = Vector::zeros(self.dim);
        let mut best_lower = f64::NEG_INFINITY;
        let mut upper = p.norm();
        for iter in 0..GILBERT_MAX_ITER {
            let w = p - &t;
            let dist = w.norm();
            upper = upper.min(dist);
            if dist <= inside_tol {
                return Membership::Inside;
            }
            let (h, s) = self.support_and_point(&w);
            let lower = (p.dot(&w) - h) / dist;
            best_lower = best_lower.max(lower);
            if lower > tol {
                return self.outside(p, w / dist);
            }
            if iter == 0 {
                // The origin is in every body; start from the first extreme point instead.
                let gamma = (w.dot(&s) / s.norm_squared().max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
                atoms.push(s.clone());
                weights.push(gamma);
                t = s * gamma;
                continue;
            }
            let fw_gap = w.dot(&(&s - &t));
            let away = (0..atoms.len())
                .filter(|&i| weights[i] > 0.0)
                .min_by(|&i, &j| w.dot(&atoms[i]).total_cmp(&w.dot(&atoms[j])));
            // Mass not on any atom sits on the origin, which can also be an away vertex.
            let origin_weight = 1.0 - weights.iter().sum::<f64>();
            let (away_dir, away_gap, away_max) = match away {
                Some(i) if w.dot(&atoms[i]) <= 0.0 || origin_weight <= 0.0 => {
                    let gap = w.dot(&(&t - &atoms[i]));
                    (Some(i), gap, weights[i] / (1.0 - weights[i]).max(f64::MIN_POSITIVE))
                }
                _ => (None, w.dot(&t), origin_weight / (1.0 - origin_weight).max(f64::MIN_POSITIVE)),
            };
            if fw_gap.max(away_gap) <= 0.0 {
                break;
            }
            if fw_gap >= away_gap {
                let d = &s - &t;
                let gamma = (w.dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
                if gamma == 0.0 {
                    break;
                }
                for wt in weights.iter_mut() {
                    *wt *= 1.0 - gamma;
                }
                match atoms.iter().position(|a| *a == s) {
                    Some(i) => weights[i] += gamma,
                    None => {
                        atoms.push(s);
                        weights.push(gamma);
                    }
                }
                t += d * gamma;
            } else {
                let v = away_dir.map_or_else(|| Vector::zeros(self.dim), |i| atoms[i].clone());
                let d = &t - &v;
                let gamma = (w.dot(&d) / d.norm_squared()).clamp(0.0, away_max);
                if gamma == 0.0 {
                    break;
                }
                for wt in weights.iter_mut() {
                    *wt *= 1.0 + gamma;
                }
                if let Some(i) = away_dir {
                    weights[i] -= gamma;
                    if weights[i] < 1e-15 {
                        weights[i] = 0.0;
                    }
                }
                t += d * gamma;
            }
            if atoms.len() > 4 * self.dim + 64 {
                // Drop dead atoms to keep the active set small.
                let keep: Vec<bool> = weights.iter().map(|w| *w > 0.0).collect();
                let mut k = keep.iter();
                atoms.retain(|_| *k.next().unwrap());
                weights.retain(|w| *w > 0.0);
            }
        }
        Membership::Inconclusive { gap: (upper - best_lower.max(0.0)).max(0.0) }
    }
}
