use proptest::prelude::*;

use super::*;
use crate::rng::{gaussian_vector, random_unit, stream_rng};

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Exact support of B₁ ∩ ρB₂ by enumerating supports S: on S the maximizer is either
/// ρ|x_S|/‖x_S‖, a vertex, or of the form α|x_S| + β·1_S with both constraints active.
fn l1l2_oracle(x: &Vector, rho: f64) -> f64 {
    let n = x.len();
    let a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let mut best = 0.0f64;
    let feasible = |t: &[f64]| {
        t.iter().all(|v| *v >= -1e-12)
            && t.iter().sum::<f64>() <= 1.0 + 1e-9
            && t.iter().map(|v| v * v).sum::<f64>().sqrt() <= rho + 1e-9
    };
    for mask in 1u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let k = s.len() as f64;
        let xs: Vec<f64> = s.iter().map(|&i| a[i]).collect();
        let a1: f64 = xs.iter().sum();
        let a2: f64 = xs.iter().map(|v| v * v).sum();
        let mut cands: Vec<Vec<f64>> = Vec::new();
        if a2 > 0.0 {
            cands.push(xs.iter().map(|v| rho * v / a2.sqrt()).collect());
        }
        cands.push(vec![1.0 / k; s.len()]);
        for &i in &s {
            cands.push(s.iter().map(|&j| if j == i { 1.0 } else { 0.0 }).collect());
        }
        // Both constraints active: t = α|x_S| + β·1_S with β = (1 − α a1)/k, and
        // ‖t‖² − ρ² is a quadratic q(α) recovered from three evaluations.
        let q = |alpha: f64| {
            let beta = (1.0 - alpha * a1) / k;
            alpha * alpha * a2 + 2.0 * alpha * beta * a1 + beta * beta * k - rho * rho
        };
        let (q0, q1, qm) = (q(0.0), q(1.0), q(-1.0));
        let qa = 0.5 * (q1 + qm) - q0;
        let qb = 0.5 * (q1 - qm);
        if qa > 1e-15 {
            let disc = qb * qb - 4.0 * qa * q0;
            if disc >= 0.0 {
                for alpha in [(-qb + disc.sqrt()) / (2.0 * qa), (-qb - disc.sqrt()) / (2.0 * qa)] {
                    let beta = (1.0 - alpha * a1) / k;
                    cands.push(xs.iter().map(|v| alpha * v + beta).collect());
                }
            }
        }
        for t in cands {
            if feasible(&t) {
                best = best.max(t.iter().zip(&xs).map(|(p, q)| p * q).sum());
            }
        }
    }
    best
}

fn sample_bodies() -> Vec<ConvexBody> {
    let mut rng = stream_rng(99, 0);
    let a = Matrix::from_fn(4, 6, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    let verts = Matrix::from_fn(7, 4, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    vec![
        ConvexBody::euclidean_ball(4, 1.7).unwrap(),
        ConvexBody::l1_ball(4, 0.8).unwrap(),
        ConvexBody::cube(4, 1.3).unwrap(),
        ConvexBody::ellipsoid(vec![0.5, 2.0, 1.0, 3.0]).unwrap(),
        ConvexBody::polytope(verts).unwrap(),
        ConvexBody::intersection_l1_l2(4, 0.7).unwrap(),
        ConvexBody::linear_image(ConvexBody::l1_ball(6, 1.0).unwrap(), a.clone()).unwrap(),
        ConvexBody::linear_image(ConvexBody::intersection_l1_l2(6, 0.6).unwrap(), a).unwrap(),
        ConvexBody::cap(ConvexBody::cube(4, 1.0).unwrap(), 1.2).unwrap(),
        ConvexBody::cap(ConvexBody::ellipsoid(vec![0.5, 2.0, 1.0, 3.0]).unwrap(), 1.1).unwrap(),
        ConvexBody::cap(ConvexBody::l1_ball(4, 1.0).unwrap(), 0.6).unwrap(),
    ]
}

fn vec4() -> impl Strategy<Value = Vector> {
    prop::collection::vec(-10.0f64..10.0, 4).prop_map(Vector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn support_is_a_norm(x in vec4(), y in vec4(), lambda in 0.0f64..20.0) {
        for body in sample_bodies() {
            let hx = body.support(&x).unwrap();
            let hy = body.support(&y).unwrap();
            prop_assert!(hx.is_finite() && hx >= 0.0);
            let hl = body.support(&(&x * lambda)).unwrap();
            prop_assert!(close(hl, lambda * hx, 1e-9), "{}: {} vs {}", body.kind_name(), hl, lambda * hx);
            let hm = body.support(&(-&x)).unwrap();
            prop_assert!(close(hm, hx, 1e-9), "{}", body.kind_name());
            let hs = body.support(&(&x + &y)).unwrap();
            prop_assert!(hs <= (hx + hy) * (1.0 + 1e-9) + 1e-12, "{}: {} > {}", body.kind_name(), hs, hx + hy);
        }
    }

    #[test]
    fn extreme_points_attain_support(x in vec4()) {
        prop_assume!(x.norm() > 1e-6);
        for body in sample_bodies() {
            let (h, t) = body.support_point(&x).unwrap();
            prop_assert!((t.dot(&x) - h).abs() <= 1e-8 * (1.0 + h), "{}: {} vs {}", body.kind_name(), t.dot(&x), h);
            // Boundary points of curved images can exhaust the separation search, so only
            // the polyhedral and closed-form bodies are checked here.
            let curved_image = matches!(body.kind(), BodyKind::LinearImage { base, .. } if base.kind_name() != "l1_ball");
            if !curved_image {
                let m = body.membership(&t, 1e-7).unwrap();
                prop_assert!(m.is_inside(), "{}: {:?}", body.kind_name(), m);
            }
        }
    }

    #[test]
    fn l1l2_sandwich(x in prop::collection::vec(-5.0f64..5.0, 1..12), rho in 0.01f64..1.5) {
        let x = Vector::from_vec(x);
        let n = x.len();
        let body = ConvexBody::intersection_l1_l2(n, rho).unwrap();
        let h = body.support(&x).unwrap();
        let upper = norm_inf(&x).min(rho * x.norm());
        prop_assert!(h <= upper * (1.0 + 1e-12) + 1e-12);
        if rho >= 1.0 {
            prop_assert!(close(h, norm_inf(&x), 1e-12));
        }
        if rho * (n as f64).sqrt() <= 1.0 {
            prop_assert!(close(h, rho * x.norm(), 1e-12));
        }
    }
}

#[test]
fn closed_form_supports() {
    assert_eq!(ConvexBody::euclidean_ball(2, 1.0).unwrap().support(&v(&[3.0, 4.0])).unwrap(), 5.0);
    assert_eq!(ConvexBody::l1_ball(3, 1.0).unwrap().support(&v(&[1.0, -2.0, 3.0])).unwrap(), 3.0);
    assert_eq!(ConvexBody::intersection_l1_l2(3, 1.0).unwrap().support(&v(&[1.0, -2.0, 3.0])).unwrap(), 3.0);
    assert_eq!(ConvexBody::cube(3, 2.0).unwrap().support(&v(&[1.0, -2.0, 3.0])).unwrap(), 12.0);
    let e = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
    assert!((e.support(&v(&[1.0, 1.0])).unwrap() - 5f64.sqrt()).abs() < 1e-15);
    let p = ConvexBody::polytope(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])).unwrap();
    assert_eq!(p.support(&v(&[-3.0, 1.0])).unwrap(), 3.0);
    let img = ConvexBody::linear_image(ConvexBody::euclidean_ball(2, 1.0).unwrap(), Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
    assert!((img.support(&v(&[1.0, 1.0])).unwrap() - 5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn input_validation() {
    let b = ConvexBody::euclidean_ball(2, 1.0).unwrap();
    assert!(matches!(b.support(&v(&[1.0])), Err(Error::DimensionMismatch { expected: 2, got: 1 })));
    assert!(matches!(b.support(&v(&[1.0, f64::NAN])), Err(Error::InvalidInput(_))));
    assert!(b.extreme_point(&v(&[0.0, 0.0])).is_err());
    assert_eq!(b.support_point(&v(&[0.0, 0.0])).unwrap(), (0.0, v(&[0.0, 0.0])));
    assert!(ConvexBody::euclidean_ball(0, 1.0).is_err());
    assert!(ConvexBody::l1_ball(2, -1.0).is_err());
    assert!(ConvexBody::ellipsoid(vec![1.0, 0.0]).is_err());
    assert!(ConvexBody::intersection_l1_l2(3, 0.0).is_err());
    assert!(ConvexBody::linear_image(b.clone(), Matrix::zeros(3, 3)).is_err());
    let poly = ConvexBody::polytope(Matrix::identity(2, 2)).unwrap();
    assert!(matches!(ConvexBody::cap(poly, 1.0), Err(Error::Unsupported(_))));
}

#[test]
fn l1l2_matches_enumeration_oracle() {
    let mut rng = stream_rng(1, 0);
    for n in 2..=6 {
        for rho in [0.3, 0.45, 0.6, 0.8, 0.95] {
            let body = ConvexBody::intersection_l1_l2(n, rho).unwrap();
            for _ in 0..20 {
                let x = gaussian_vector(&mut rng, n);
                let h = body.support(&x).unwrap();
                let oracle = l1l2_oracle(&x, rho);
                assert!((h - oracle).abs() < 1e-8, "n={n} rho={rho}: {h} vs {oracle}");
            }
        }
    }
}

#[test]
fn l1l2_matches_grid_search_in_dim_three() {
    let body = ConvexBody::intersection_l1_l2(3, 0.8).unwrap();
    let x = v(&[1.0, 1.0, 1.0]);
    let step = 0.005;
    let m = (1.0 / step) as i64;
    let mut best = 0.0f64;
    for i in -m..=m {
        for j in -m..=m {
            let (a, b) = (i as f64 * step, j as f64 * step);
            let rest = 1.0 - a.abs() - b.abs();
            if rest < 0.0 {
                continue;
            }
            // For fixed (a, b) the best third coordinate is the largest admissible c ≥ 0.
            let c = rest.min((0.64 - a * a - b * b).max(0.0).sqrt());
            if a * a + b * b <= 0.64 {
                best = best.max(a + b + c);
            }
        }
    }
    assert!((body.support(&x).unwrap() - best).abs() < 1e-4);
}

#[test]
fn extreme_point_examples() {
    let l1 = ConvexBody::l1_ball(3, 1.0).unwrap();
    assert_eq!(l1.extreme_point(&v(&[0.1, -5.0, 2.0])).unwrap(), v(&[0.0, -1.0, 0.0]));
    assert_eq!(l1.extreme_point(&v(&[2.0, -2.0, 1.0])).unwrap(), v(&[1.0, 0.0, 0.0]));
    let b2 = ConvexBody::euclidean_ball(2, 1.0).unwrap();
    let t = b2.extreme_point(&v(&[3.0, 4.0])).unwrap();
    assert!((t - v(&[0.6, 0.8])).norm() < 1e-15);
    let gamma = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 3.0]);
    let img = ConvexBody::linear_image(l1.clone(), gamma.clone()).unwrap();
    let d = v(&[1.0, 1.0]);
    let expected = &gamma * l1.extreme_point(&gamma.tr_mul(&d)).unwrap();
    assert_eq!(img.extreme_point(&d).unwrap(), expected);
}

#[test]
fn exact_radii() {
    assert_eq!(ConvexBody::euclidean_ball(3, 2.0).unwrap().euclidean_radius().value, 2.0);
    let c = ConvexBody::cube(4, 1.0).unwrap().euclidean_radius();
    assert!(c.exact && c.value == 2.0);
    assert_eq!(ConvexBody::ellipsoid(vec![1.0, 3.0, 2.0]).unwrap().euclidean_radius().value, 3.0);
    assert_eq!(ConvexBody::intersection_l1_l2(10, 0.5).unwrap().euclidean_radius().value, 0.5);
    assert_eq!(ConvexBody::intersection_l1_l2(10, 0.2).unwrap().euclidean_radius().value, 0.2);
    assert_eq!(ConvexBody::intersection_l1_l2(10, 2.0).unwrap().euclidean_radius().value, 1.0);
    let p = ConvexBody::polytope(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])).unwrap();
    assert!((p.euclidean_radius().value - 2f64.sqrt()).abs() < 1e-15);
}

fn power_iteration(a: &Matrix) -> f64 {
    let gram = a.transpose() * a;
    let mut x = Vector::from_element(a.ncols(), 1.0);
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let y = &gram * &x;
        lambda = y.norm();
        x = y / lambda;
    }
    lambda.sqrt()
}

#[test]
fn image_radius_matches_svd_and_power_iteration() {
    let mut rng = stream_rng(5, 0);
    for (m, n) in [(3, 7), (7, 3), (20, 50), (1, 4)] {
        let a = Matrix::from_fn(m, n, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
        let svd = a.clone().svd(false, false).singular_values.max();
        let body = ConvexBody::linear_image(ConvexBody::euclidean_ball(n, 1.0).unwrap(), a.clone()).unwrap();
        let r = body.euclidean_radius();
        assert!(r.exact && (r.value - svd).abs() < 1e-6, "{} vs {svd}", r.value);
        assert!((r.value - power_iteration(&a)).abs() < 1e-6);
        assert!((r.point.norm() - r.value).abs() < 1e-9);
        let ell = ConvexBody::linear_image(ConvexBody::ellipsoid((1..=n).map(|i| i as f64).collect()).unwrap(), a.clone()).unwrap();
        let scaled = &a * Matrix::from_diagonal(&Vector::from_fn(n, |i, _| (i + 1) as f64));
        assert!((ell.euclidean_radius().value - scaled.svd(false, false).singular_values.max()).abs() < 1e-6);
    }
}

#[test]
fn heuristic_radius_is_a_feasible_lower_bound() {
    let mut rng = stream_rng(8, 0);
    let a = Matrix::from_fn(3, 5, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    let body = ConvexBody::linear_image(ConvexBody::cube(5, 1.0).unwrap(), a.clone()).unwrap();
    let r = body.euclidean_radius();
    assert!(!r.exact);
    // Brute force over the 32 cube vertices.
    let exact = (0..32u32)
        .map(|mask| (&a * Vector::from_fn(5, |i, _| if mask & (1 << i) != 0 { 1.0 } else { -1.0 })).norm())
        .fold(0.0, f64::max);
    assert!(r.value <= exact + 1e-12);
    assert!(r.value >= 0.999 * exact);
    assert!(body.radius_upper_bound() >= exact);
}

#[test]
fn cap_of_ball_and_l1_match_closed_forms() {
    let mut rng = stream_rng(3, 0);
    let ball = ConvexBody::euclidean_ball(6, 1.0).unwrap();
    let rho = 0.45;
    let cap_l1 = ConvexBody::cap(ConvexBody::l1_ball(6, 1.0).unwrap(), rho).unwrap();
    let direct = ConvexBody::intersection_l1_l2(6, rho).unwrap();
    for _ in 0..200 {
        let x = gaussian_vector(&mut rng, 6);
        let c = ConvexBody::cap(ball.clone(), 0.5).unwrap();
        assert!((c.support(&x).unwrap() - 0.5 * x.norm()).abs() < 1e-12);
        let a = cap_l1.support(&x).unwrap();
        let b = direct.support(&x).unwrap();
        assert!((a - b).abs() < 1e-9 * (1.0 + b), "{a} vs {b}");
    }
}

#[test]
fn cap_of_cube_matches_vertex_search() {
    // In dim 2, K ∩ rB₂ for the square: compare against a fine boundary parameterization.
    let cube = ConvexBody::cube(2, 1.0).unwrap();
    let cap = ConvexBody::cap(cube, 1.2).unwrap();
    let mut rng = stream_rng(4, 0);
    for _ in 0..30 {
        let x = random_unit(&mut rng, 2);
        let mut best = 0.0f64;
        for i in 0..200_000 {
            let ang = i as f64 / 200_000.0 * std::f64::consts::TAU;
            let t = v(&[ang.cos(), ang.sin()]) * 1.2;
            let t = t.map(|c| c.clamp(-1.0, 1.0));
            best = best.max(t.dot(&x));
        }
        assert!((cap.support(&x).unwrap() - best).abs() < 1e-6);
    }
    let r = cap.euclidean_radius();
    assert!(r.exact && r.value == 1.2);
}

#[test]
fn projections() {
    let mut rng = stream_rng(12, 0);
    for _ in 0..50 {
        let p = gaussian_vector(&mut rng, 5) * 2.0;
        let l1 = project_ell1(&p);
        assert!(norm1(&l1) <= 1.0 + 1e-12);
        // Optimality: ⟨p − x, y − x⟩ ≤ 0 for the vertices y = ±e_i.
        for i in 0..5 {
            for s in [-1.0, 1.0] {
                let y = unit(5, i) * s;
                assert!((&p - &l1).dot(&(y - &l1)) <= 1e-10);
            }
        }
        let axes = v(&[0.5, 1.0, 2.0, 3.0, 0.7]);
        let ell = ConvexBody::ellipsoid(axes.iter().copied().collect()).unwrap();
        let q = ell.project(&p).unwrap();
        assert!(q.component_div(&axes).norm() <= 1.0 + 1e-12);
        // Residual is normal to the ellipsoid: parallel to q/a².
        let normal = q.component_div(&axes).component_div(&axes);
        let r = &p - &q;
        if r.norm() > 1e-9 {
            assert!((r.dot(&normal) / (r.norm() * normal.norm()) - 1.0).abs() < 1e-8);
        }
        let both = ConvexBody::intersection_l1_l2(5, 0.5).unwrap();
        let x = both.project(&p).unwrap();
        assert!(norm1(&x) <= 1.0 + 1e-9 && x.norm() <= 0.5 + 1e-9);
        let witness = both.support_point(&(&p - &x)).unwrap().1;
        assert!((&p - &x).dot(&(witness - &x)) <= 1e-7);
    }
    let poly = ConvexBody::polytope(Matrix::identity(2, 2)).unwrap();
    assert!(matches!(poly.project(&v(&[1.0, 1.0])), Err(Error::Unsupported(_))));
}

fn project_ell1(p: &Vector) -> Vector {
    ConvexBody::l1_ball(p.len(), 1.0).unwrap().project(p).unwrap()
}

#[test]
fn membership_examples() {
    let b2 = ConvexBody::euclidean_ball(2, 1.0).unwrap();
    assert_eq!(b2.membership(&v(&[0.6, 0.8]), 0.0).unwrap(), Membership::Inside);
    let l1 = ConvexBody::l1_ball(2, 1.0).unwrap();
    match l1.membership(&v(&[0.7, 0.7]), 0.0).unwrap() {
        Membership::Outside { separator, violation } => {
            assert_eq!(separator, v(&[1.0, 1.0]));
            assert!((violation - 0.4).abs() < 1e-12);
        }
        other => panic!("{other:?}"),
    }
    let mut rng = stream_rng(2, 0);
    let gamma = Matrix::from_fn(3, 8, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    let img = ConvexBody::linear_image(ConvexBody::l1_ball(8, 1.0).unwrap(), gamma.clone()).unwrap();
    let p = gamma.column(0) * 0.5;
    assert!(img.membership(&p, 0.0).unwrap().is_inside());
    let far = gamma.column(0) * 50.0;
    match img.membership(&far, 0.0).unwrap() {
        Membership::Outside { separator, violation } => {
            assert!((far.dot(&separator) - img.support(&separator).unwrap() - violation).abs() < 1e-9);
            assert!(violation > 0.0);
        }
        other => panic!("{other:?}"),
    }
    let cube = ConvexBody::cube(3, 1.0).unwrap();
    assert!(cube.membership(&v(&[1.0, -1.0, 1.0]), 0.0).unwrap().is_inside());
    assert!(cube.membership(&v(&[1.0, -1.1, 1.0]), 0.0).unwrap().is_outside());
    assert!(cube.membership(&v(&[1.0, -1.1, 1.0]), 0.2).unwrap().is_inside());
}

#[test]
fn membership_radius_bound() {
    let mut rng = stream_rng(6, 0);
    for body in sample_bodies() {
        let d = body.radius_upper_bound();
        for _ in 0..30 {
            let p = gaussian_vector(&mut rng, body.dim());
            if body.membership(&p, 0.0).unwrap().is_inside() {
                assert!(p.norm() <= d * (1.0 + 1e-9) + 1e-9, "{}", body.kind_name());
            }
        }
    }
}

#[test]
fn polytope_membership_agrees_with_support() {
    let mut rng = stream_rng(10, 0);
    let verts = Matrix::from_fn(6, 3, |_, _| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng));
    let poly = ConvexBody::polytope(verts.clone()).unwrap();
    for _ in 0..200 {
        let p = gaussian_vector(&mut rng, 3) * 0.8;
        match poly.membership(&p, 1e-9).unwrap() {
            Membership::Inside => {
                // Inside means no unit direction separates.
                for _ in 0..50 {
                    let z = random_unit(&mut rng, 3);
                    assert!(p.dot(&z) <= poly.support(&z).unwrap() + 1e-8);
                }
            }
            Membership::Outside { separator, violation } => {
                assert!(violation > 1e-9);
                assert!(p.dot(&separator) - poly.support(&separator).unwrap() > 1e-9);
            }
            Membership::Inconclusive { .. } => {}
        }
    }
}

#[test]
fn restriction_and_scaling() {
    let e = ConvexBody::ellipsoid(vec![1.0, 2.0, 3.0]).unwrap();
    let r = e.restrict_coordinates(&[0, 2]).unwrap();
    assert_eq!(r.support(&v(&[1.0, 1.0])).unwrap(), 10f64.sqrt());
    assert!(e.restrict_coordinates(&[2, 0]).is_err());
    assert!(e.restrict_coordinates(&[3]).is_err());
    assert!(e.restrict_coordinates(&[]).is_err());
    let cap = ConvexBody::cap(ConvexBody::cube(3, 1.0).unwrap(), 1.2).unwrap();
    let rc = cap.restrict_coordinates(&[1]).unwrap();
    assert!((rc.support(&v(&[1.0])).unwrap() - 1.0).abs() < 1e-12);
    let mut rng = stream_rng(13, 0);
    for body in sample_bodies() {
        let s = body.scaled(2.5).unwrap();
        let x = gaussian_vector(&mut rng, body.dim());
        assert!(close(s.support(&x).unwrap(), 2.5 * body.support(&x).unwrap(), 1e-9), "{}", body.kind_name());
    }
}

#[test]
fn nested_images_fold() {
    let a = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.0, 1.0, 1.0]);
    let b = Matrix::from_row_slice(1, 2, &[2.0, -1.0]);
    let inner = ConvexBody::linear_image(ConvexBody::l1_ball(3, 1.0).unwrap(), a.clone()).unwrap();
    let outer = ConvexBody::linear_image(inner, b.clone()).unwrap();
    match outer.kind() {
        BodyKind::LinearImage { base, matrix } => {
            assert_eq!(base.kind_name(), "l1_ball");
            assert_eq!(matrix.as_ref(), &(&b * &a));
        }
        _ => panic!(),
    }
}

#[test]
fn descriptors() {
    let d = BodyDescriptor::from_json(r#"{"kind": "l1", "dim": 64, "radius": 1.0}"#).unwrap();
    assert_eq!(d, BodyDescriptor::L1 { dim: 64, radius: 1.0 });
    let d = BodyDescriptor::from_json(r#"{"kind": "intersection_l1_l2", "dim": 256, "rho": 0.25}"#).unwrap();
    let body = d.build(std::path::Path::new(".")).unwrap();
    assert_eq!(body.dim(), 256);
    assert!(BodyDescriptor::from_json(r#"{"kind": "l1", "dim": 4, "radius": 1.0, "extra": 1}"#).is_err());
    assert!(BodyDescriptor::from_json(r#"{"kind": "simplex", "dim": 4}"#).is_err());
    let cube = BodyDescriptor::from_json(r#"{"kind": "linf", "dim": 3}"#).unwrap();
    assert_eq!(cube, BodyDescriptor::Cube { dim: 3, radius: 1.0 });

    let dir = std::env::temp_dir().join(format!("dvolab-desc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let m = Matrix::from_row_slice(2, 3, &[0.1, -2.5, 3.0, 1e-17, 4.0, -0.3333333333333333]);
    write_matrix_csv(dir.join("a.csv"), &m).unwrap();
    assert_eq!(load_matrix_csv(dir.join("a.csv")).unwrap(), m);
    let img = BodyDescriptor::from_json(r#"{"kind": "image", "base": {"kind": "l2", "dim": 3}, "matrix": "a.csv"}"#)
        .unwrap()
        .build(&dir)
        .unwrap();
    assert_eq!(img.dim(), 2);
    let inline = BodyDescriptor::from_json(r#"{"kind": "polytope", "vertices": [[1, 0], [0, 2]]}"#).unwrap().build(&dir).unwrap();
    assert_eq!(inline.support(&v(&[0.0, 1.0])).unwrap(), 2.0);
    let capped = BodyDescriptor::from_json(r#"{"kind": "cap", "base": {"kind": "cube", "dim": 2}, "r": 1.2}"#).unwrap().build(&dir).unwrap();
    assert_eq!(capped.kind_name(), "cap");
    std::fs::write(dir.join("bad.csv"), "1,2\n3\n").unwrap();
    assert!(load_matrix_csv(dir.join("bad.csv")).is_err());
    std::fs::write(dir.join("nan.csv"), "1,x\n").unwrap();
    assert!(load_matrix_csv(dir.join("nan.csv")).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}


#[test]
fn l1l2_exact_theta_beats_golden_section() {
    let mut rng = stream_rng(8, 0);
    for n in [2, 5, 40, 512] {
        for rho in [0.05, 0.2, 0.5, 0.9] {
            let x = gaussian_vector(&mut rng, n);
            let sorted = sorted_abs_desc(&x);
            let theta = l1l2_exact_theta(&sorted, rho).expect("sign change found");
            let (_, golden) = l1l2_theta(&sorted, rho);
            let exact = l1l2_objective(&sorted, rho, theta);
            assert!(exact <= golden + 1e-12 * golden, "n={n} rho={rho}: {exact} vs {golden}");
            assert!((exact - golden).abs() < 1e-8 * golden);
        }
    }
}
