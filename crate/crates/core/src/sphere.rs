//! Multi-start searches and deterministic nets on the unit sphere.
//!
//! Sup-type problems (Euclidean radius of a body, empirical diameters) are
//! maximizations of a convex function over the sphere and use the fixed-point
//! step `z ← g/‖g‖`, which never decreases a convex objective. Inf-type problems
//! (inradius, cube side) use projected normalized subgradient descent with a
//! `step/√k` schedule. Both return the best iterate over all runs, so a maximum
//! is a lower bound on the true sup and a minimum an upper bound on the true inf.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{normalize_mut, Vector};
use crate::rng::{random_unit, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSearch {
    pub restarts: usize,
    pub iterations: usize,
    pub step: f64,
    pub seed: u64,
}

impl SphereSearch {
    /// Defaults for sup problems.
    pub fn sup_default(seed: u64) -> Self {
        SphereSearch { restarts: 64, iterations: 500, step: 0.1, seed }
    }

    /// Defaults for inf problems; these drive "verified" claims so they get more restarts.
    pub fn inf_default(seed: u64) -> Self {
        SphereSearch { restarts: 256, iterations: 500, step: 0.1, seed }
    }
}

#[derive(Debug, Clone)]
pub struct SphereOptimum {
    pub value: f64,
    pub point: Vector,
    /// Oracle gradient at `point`.
    pub gradient: Vector,
    /// Index of the run that produced the optimum (0 is the best probe when probes are given).
    pub run: usize,
}

fn starts(dim: usize, search: &SphereSearch, probe: Option<Vector>) -> Vec<Vector> {
    let mut out = Vec::with_capacity(search.restarts + 1);
    if let Some(p) = probe {
        out.push(p);
    }
    for r in 0..search.restarts {
        let mut rng = stream_rng(search.seed, r as u64);
        out.push(random_unit(&mut rng, dim));
    }
    out
}

fn best_probe<F>(probes: &[Vector], oracle: &F, maximize: bool) -> Option<(f64, Vector)>
where
    F: Fn(&Vector) -> (f64, Vector) + Sync,
{
    let mut best: Option<(f64, Vector)> = None;
    for p in probes {
        let mut z = p.clone();
        if !normalize_mut(&mut z) {
            continue;
        }
        let (v, _) = oracle(&z);
        let better = match &best {
            None => true,
            Some((b, _)) => (maximize && v > *b) || (!maximize && v < *b),
        };
        if better {
            best = Some((v, z));
        }
    }
    best
}

fn reduce(results: Vec<SphereOptimum>, maximize: bool) -> SphereOptimum {
    let mut it = results.into_iter();
    let mut best = it.next().expect("at least one run");
    for r in it {
        let better = if maximize { r.value > best.value } else { r.value < best.value };
        if better {
            best = r;
        }
    }
    best
}

/// Maximizes a convex function over the unit sphere. `oracle(z)` returns the value and a
/// subgradient at `z`. Probes are evaluated once; the best one seeds run 0.
pub fn maximize_convex<F>(dim: usize, search: &SphereSearch, probes: &[Vector], oracle: F) -> SphereOptimum
where
    F: Fn(&Vector) -> (f64, Vector) + Sync,
{
    assert!(dim > 0);
    let probe = best_probe(probes, &oracle, true).map(|(_, z)| z);
    let starts = starts(dim, search, probe);
    let results: Vec<SphereOptimum> = starts
        .into_par_iter()
        .enumerate()
        .map(|(run, z0)| {
            let (mut f, mut g) = oracle(&z0);
            let mut z = z0;
            for _ in 0..search.iterations {
                let mut next = g.clone();
                if !normalize_mut(&mut next) {
                    break;
                }
                let (f2, g2) = oracle(&next);
                if f2 <= f * (1.0 + 1e-15) + 1e-300 {
                    break;
                }
                z = next;
                f = f2;
                g = g2;
            }
            SphereOptimum { value: f, point: z, gradient: g, run }
        })
        .collect();
    reduce(results, true)
}

/// Minimizes a (nonconvex on the sphere) function by projected normalized subgradient descent.
pub fn minimize<F>(dim: usize, search: &SphereSearch, probes: &[Vector], oracle: F) -> SphereOptimum
where
    F: Fn(&Vector) -> (f64, Vector) + Sync,
{
    assert!(dim > 0);
    let probe = best_probe(probes, &oracle, false).map(|(_, z)| z);
    let starts = starts(dim, search, probe);
    let results: Vec<SphereOptimum> = starts
        .into_par_iter()
        .enumerate()
        .map(|(run, z0)| descend(z0, search.iterations, search.step, &oracle, run))
        .collect();
    reduce(results, false)
}

pub(crate) fn descend<F>(z0: Vector, iterations: usize, step: f64, oracle: &F, run: usize) -> SphereOptimum
where
    F: Fn(&Vector) -> (f64, Vector),
{
    let mut z = z0;
    let (f0, g0) = oracle(&z);
    let mut best = SphereOptimum { value: f0, point: z.clone(), gradient: g0.clone(), run };
    let mut g = g0;
    for k in 1..=iterations {
        let radial = g.dot(&z);
        let mut tangent = &g - &z * radial;
        if !normalize_mut(&mut tangent) {
            break;
        }
        let mut next = &z - tangent * (step / (k as f64).sqrt());
        if !normalize_mut(&mut next) {
            break;
        }
        z = next;
        let (f, g_new) = oracle(&z);
        if f < best.value {
            best = SphereOptimum { value: f, point: z.clone(), gradient: g_new.clone(), run };
        }
        g = g_new;
    }
    best
}

/// A finite subset of the sphere with a proven covering radius (chordal distance).
#[derive(Debug, Clone)]
pub struct SphereNet {
    pub points: Vec<Vector>,
    pub covering_radius: f64,
}

/// Deterministic sphere net. Dimension 1 is exact, dimension 2 is an equiangular circle,
/// and higher dimensions radially project cell centers of a grid on the cube surface
/// (radial projection from outside the ball is 1-Lipschitz, so the cube-face covering
/// radius carries over).
pub fn sphere_net(dim: usize, resolution: f64) -> Result<SphereNet> {
    if dim == 0 {
        return Err(invalid("sphere net needs dim ≥ 1"));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(invalid("net resolution must be positive"));
    }
    match dim {
        1 => Ok(SphereNet {
            points: vec![Vector::from_element(1, 1.0), Vector::from_element(1, -1.0)],
            covering_radius: 0.0,
        }),
        2 => {
            let k = ((std::f64::consts::PI / resolution).ceil() as usize).max(4);
            let points = (0..k)
                .map(|j| {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                    Vector::from_vec(vec![a.cos(), a.sin()])
                })
                .collect();
            let covering_radius = 2.0 * (std::f64::consts::PI / (2.0 * k as f64)).sin();
            Ok(SphereNet { points, covering_radius })
        }
        d => {
            let face_dims = (d - 1) as f64;
            let g = (face_dims.sqrt() / resolution).ceil() as usize;
            let total = 2 * d * g.pow((d - 1) as u32);
            if total > 20_000_000 {
                return Err(invalid(format!("sphere net with {total} points is too large")));
            }
            let h = 2.0 / g as f64;
            let centers: Vec<f64> = (0..g).map(|j| -1.0 + h * (j as f64 + 0.5)).collect();
            let mut points = Vec::with_capacity(total);
            let mut counter = vec![0usize; d - 1];
            for axis in 0..d {
                for side in [1.0, -1.0] {
                    counter.iter_mut().for_each(|c| *c = 0);
                    loop {
                        let mut p = Vector::zeros(d);
                        let mut slot = 0;
                        for (i, v) in p.iter_mut().enumerate() {
                            if i == axis {
                                *v = side;
                            } else {
                                *v = centers[counter[slot]];
                                slot += 1;
                            }
                        }
                        normalize_mut(&mut p);
                        points.push(p);
                        let mut pos = 0;
                        while pos < d - 1 {
                            counter[pos] += 1;
                            if counter[pos] < g {
                                break;
                            }
                            counter[pos] = 0;
                            pos += 1;
                        }
                        if pos == d - 1 {
                            break;
                        }
                    }
                }
            }
            Ok(SphereNet { points, covering_radius: h * face_dims.sqrt() / 2.0 })
        }
    }
}

/// Minimum of `f` over the net; ties go to the lowest point index.
pub fn net_minimize<F>(net: &SphereNet, f: F) -> (f64, Vector)
where
    F: Fn(&Vector) -> f64 + Sync,
{
    let values: Vec<f64> = net.points.par_iter().map(&f).collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    (values[best], net.points[best].clone())
}

/// Maximum of `f` over the net; ties go to the lowest point index.
pub fn net_maximize<F>(net: &SphereNet, f: F) -> (f64, Vector)
where
    F: Fn(&Vector) -> f64 + Sync,
{
    let (v, p) = net_minimize(net, |z| -f(z));
    (-v, p)
}
