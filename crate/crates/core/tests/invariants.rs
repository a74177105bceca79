//! Property tests of the geometric invariants.

mod common;

use hilbert_core::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, failure_persistence: None, rng_seed: RngSeed::Fixed(0x5eed), ..ProptestConfig::default() }
}

fn disk_chart() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..0.97, 0.0f64..std::f64::consts::TAU).prop_map(|(r, th)| [r * th.cos(), r * th.sin()])
}

fn disk_point() -> impl Strategy<Value = ProjPoint> {
    disk_chart().prop_map(|c| common::disk().point(&c).unwrap())
}

fn simplex_point() -> impl Strategy<Value = ProjPoint> {
    prop::array::uniform3(0.02f64..1.0).prop_map(|w| ProjPoint::new(&w).unwrap())
}

fn boundary_angle() -> impl Strategy<Value = BoundaryPoint> {
    (0.0f64..std::f64::consts::TAU).prop_map(|th| common::disk().boundary_at(&[th.cos(), th.sin()]).unwrap())
}

/// Matrices within 0.3 of the identity entrywise; condition number stays small.
fn near_identity() -> impl Strategy<Value = ProjTransform> {
    prop::collection::vec(-0.3f64..0.3, 9).prop_map(|e| {
        let m = DMatrix::from_fn(3, 3, |i, j| e[3 * i + j] + if i == j { 1.0 } else { 0.0 });
        ProjTransform::new(m).unwrap()
    })
}

fn on_line(a: &[f64; 3], u: &[f64; 3], s: f64) -> ProjPoint {
    ProjPoint::new(&[a[0] + s * u[0], a[1] + s * u[1], a[2] + s * u[2]]).unwrap()
}

/// `n` increasing parameters in `[0, 1]`, consecutive ones at least `gap` apart.
fn increasing(n: usize, gap: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, n + 1).prop_map(move |w| {
        let slack = 1.0 - gap * (n - 1) as f64;
        let total: f64 = w.iter().sum::<f64>().max(1e-12);
        let mut acc = 0.0;
        (0..n).map(|i| {
            acc += w[i] / total * slack;
            acc + gap * i as f64
        }).collect()
    })
}

fn fixture_isometry() -> impl Strategy<Value = ProjTransform> {
    let gens = common::fuchsian().generators().to_vec();
    (0..gens.len()).prop_map(move |i| gens[i].clone())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn cross_ratio_projective_invariance(t in near_identity(), s in increasing(4, 0.05)) {
        let (a0, u) = ([0.2, -0.1, 1.0], [0.5, 0.8, 0.1]);
        let p: Vec<ProjPoint> = s.iter().map(|v| on_line(&a0, &u, *v)).collect();
        let before = cross_ratio(&p[0], &p[1], &p[2], &p[3]).unwrap();
        let q: Vec<ProjPoint> = p.iter().map(|x| t.apply(x).unwrap()).collect();
        let after = cross_ratio(&q[0], &q[1], &q[2], &q[3]).unwrap();
        prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
    }

    #[test]
    fn cross_ratio_cocycle(s in increasing(5, 0.03)) {
        let (a0, u) = ([0.0, 0.3, 1.0], [1.0, -0.2, 0.3]);
        let p: Vec<ProjPoint> = s.iter().map(|v| on_line(&a0, &u, *v)).collect();
        let (a, x, y, z, b) = (&p[0], &p[1], &p[2], &p[3], &p[4]);
        let lhs = cross_ratio(a, x, y, b).unwrap() * cross_ratio(a, y, z, b).unwrap();
        let rhs = cross_ratio(a, x, z, b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs());
    }

    #[test]
    fn canonical_forms(t in near_identity(), k in -5.0f64..5.0) {
        prop_assume!(k.abs() > 1e-3);
        let c = canonicalize(t.matrix()).unwrap();
        let again = canonicalize(c.matrix()).unwrap();
        prop_assert!((c.matrix() - again.matrix()).amax() < 1e-15);
        let scaled = canonicalize(&(t.matrix() * k)).unwrap();
        prop_assert!((c.matrix() - scaled.matrix()).amax() < 1e-14);
    }

    #[test]
    fn metric_axioms_disk(x in disk_point(), y in disk_point(), z in disk_point()) {
        let d = common::disk();
        let dxy = d.hilbert_distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, d.hilbert_distance(&y, &x).unwrap());
        let dxz = d.hilbert_distance(&x, &z).unwrap();
        let dzy = d.hilbert_distance(&z, &y).unwrap();
        prop_assert!(dxy <= dxz + dzy + 1e-9);
    }

    #[test]
    fn metric_axioms_simplex(x in simplex_point(), y in simplex_point(), z in simplex_point()) {
        let s = ConvexDomain::simplex(2).unwrap();
        let dxy = s.hilbert_distance(&x, &y).unwrap();
        prop_assert_eq!(dxy, s.hilbert_distance(&y, &x).unwrap());
        prop_assert!(dxy <= s.hilbert_distance(&x, &z).unwrap() + s.hilbert_distance(&z, &y).unwrap() + 1e-9);
    }

    #[test]
    fn projective_invariance(t in near_identity(), x in disk_point(), y in disk_point()) {
        let d = common::disk();
        let image = d.transformed(&t).unwrap();
        let before = d.hilbert_distance(&x, &y).unwrap();
        let after = image.hilbert_distance(&t.apply(&x).unwrap(), &t.apply(&y).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-8, "{} {}", before, after);
    }

    #[test]
    fn smaller_domains_have_larger_distances(x in simplex_point(), y in simplex_point()) {
        let s = ConvexDomain::simplex(2).unwrap();
        // move the triangle to a bounded chart picture, then compare with its
        // Steiner circumellipse
        let m = ProjTransform::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let tri = s.transformed(&m).unwrap();
        let corners: Vec<Vec<f64>> = tri.vertex_points().iter().map(|v| {
            let c = v.to_f64();
            vec![c[0] / c[2], c[1] / c[2]]
        }).collect();
        let c = [(corners[0][0] + corners[1][0] + corners[2][0]) / 3.0, (corners[0][1] + corners[1][1] + corners[2][1]) / 3.0];
        let mut cov = DMatrix::zeros(2, 2);
        for v in &corners {
            let w = nalgebra::DVector::from_vec(vec![v[0] - c[0], v[1] - c[1]]);
            cov += &w * w.transpose();
        }
        let shape = cov.try_inverse().unwrap() * 1.5;
        let ell = ConvexDomain::ellipsoid(&c, &shape).unwrap();
        let (tx, ty) = (m.apply(&x).unwrap(), m.apply(&y).unwrap());
        let inner = tri.hilbert_distance(&tx, &ty).unwrap();
        let outer = ell.hilbert_distance(&tx, &ty).unwrap();
        prop_assert!(inner >= outer - 1e-9, "{} {}", inner, outer);
    }

    #[test]
    fn line_hits_on_the_boundary(x in disk_point(), y in disk_point()) {
        let d = common::disk();
        prop_assume!(d.hilbert_distance(&x, &y).unwrap() > 1e-3);
        let (a, b) = d.line_hits(&x, &y).unwrap();
        for p in [a, b] {
            let c = d.chart_coords(p.point()).unwrap();
            prop_assert!((c[0] * c[0] + c[1] * c[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn flow_unit_speed_and_additivity(x in disk_point(), th in 0.0f64..std::f64::consts::TAU, s in -5.0f64..5.0, t in -5.0f64..5.0) {
        let d = common::disk();
        let v = UnitTangent::new(x.clone(), &[th.cos(), th.sin()]).unwrap();
        let w = flow(&d, &v, s + t).unwrap();
        prop_assert!((d.hilbert_distance(&x, w.foot()).unwrap() - (s + t).abs()).abs() < 1e-9);
        let two = flow(&d, &flow(&d, &v, s).unwrap(), t).unwrap();
        prop_assert!(d.hilbert_distance(two.foot(), w.foot()).unwrap() < 1e-9);
        let (m0, p0) = endpoints(&d, &v).unwrap();
        let (m1, p1) = endpoints(&d, &w).unwrap();
        prop_assert!(m0.approx_eq(&m1, 1e-9) && p0.approx_eq(&p1, 1e-9));
    }

    #[test]
    fn flow_equivariance(g in fixture_isometry(), x in disk_point(), th in 0.0f64..std::f64::consts::TAU, t in -4.0f64..4.0) {
        let d = common::disk();
        let v = UnitTangent::new(x, &[th.cos(), th.sin()]).unwrap();
        let gv = v.transformed(&d, &d, &g).unwrap();
        let a = flow(&d, &v, t).unwrap().transformed(&d, &d, &g).unwrap();
        let b = flow(&d, &gv, t).unwrap();
        prop_assert!(d.hilbert_distance(a.foot(), b.foot()).unwrap() < 1e-8);
    }

    #[test]
    fn busemann_identities(xi in boundary_angle(), x in disk_point(), y in disk_point(), w in disk_point()) {
        let d = common::disk();
        let b = |p: &ProjPoint, q: &ProjPoint| busemann_at(&d, &xi, p, q).unwrap();
        prop_assert!((b(&x, &y) + b(&y, &w) - b(&x, &w)).abs() < 1e-9);
        prop_assert!((b(&x, &y) + b(&y, &x)).abs() < 1e-9);
        prop_assert!(b(&x, &y).abs() <= d.hilbert_distance(&x, &y).unwrap() + 1e-9);
    }

    #[test]
    fn busemann_equivariance(g in fixture_isometry(), xi in boundary_angle(), x in disk_point(), y in disk_point()) {
        let d = common::disk();
        let gxi = d.boundary_point(&g.apply(xi.point()).unwrap()).unwrap();
        let before = busemann_at(&d, &xi, &x, &y).unwrap();
        let after = busemann_at(&d, &gxi, &g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap();
        prop_assert!((before - after).abs() < 1e-8, "{} {}", before, after);
    }

    #[test]
    fn busemann_matches_its_limit(xi in boundary_angle(), x in disk_point(), y in disk_point()) {
        let d = common::disk();
        let dir = BoundaryDirection::new(xi.clone(), x.clone());
        let exact = busemann(&d, &dir, &x, &y).unwrap();
        let limit = busemann_limit_oracle(&d, &dir, &x, &y, 30.0).unwrap();
        prop_assert!((exact - limit).abs() <= 1e-6);
    }

    #[test]
    fn busemann_continuous_along_the_circle(th in 0.0f64..std::f64::consts::TAU, x in disk_point(), y in disk_point()) {
        let d = common::disk();
        let at = |a: f64| busemann_at(&d, &d.boundary_at(&[a.cos(), a.sin()]).unwrap(), &x, &y).unwrap();
        let limit = at(th);
        for k in 1..=5 {
            prop_assert!((at(th + 1e-5 / k as f64) - limit).abs() < 1e-4);
        }
    }
}
