mod common;

use std::sync::OnceLock;

use hilbert_core::*;

fn base() -> ProjPoint {
    common::disk().point(&[0.1, 0.05]).unwrap()
}

fn fuchsian_ball() -> &'static OrbitBall {
    static BALL: OnceLock<OrbitBall> = OnceLock::new();
    BALL.get_or_init(|| enumerate_orbit(&common::disk(), &common::fuchsian(), &base(), &base(), 10).unwrap())
}

fn trivial_ball(x: &ProjPoint, o: &ProjPoint) -> OrbitBall {
    let g = GroupPresentation::new("trivial", vec![]).unwrap();
    enumerate_orbit(&common::disk(), &g, x, o, 3).unwrap()
}

#[test]
fn trivial_group_single_atom() {
    let d = common::disk();
    let o = d.point(&[0.3, 0.0]).unwrap();
    let ball = trivial_ball(&o, &o);
    let mu = ps_approx(&ball, &o, 1.5).unwrap();
    assert_eq!(mu.atoms.len(), 1);
    assert!((mu.total_mass - 1.0).abs() < 1e-15);
    assert_eq!(mu.undirected, 1);
    let x = d.point(&[-0.2, 0.1]).unwrap();
    let mu = ps_approx(&ball, &x, 1.5).unwrap();
    let dxo = d.hilbert_distance(&x, &o).unwrap();
    assert!((mu.atoms[0].weight - (-1.5 * dxo).exp()).abs() < 1e-14);
}

#[test]
fn normalized_at_the_basepoint() {
    let ball = fuchsian_ball();
    for s in [0.5, 1.1, 2.0] {
        let mu = ps_approx(ball, &base(), s).unwrap();
        assert!((mu.total_mass - 1.0).abs() < 1e-9);
        assert!(mu.atoms.iter().all(|a| a.weight > 0.0));
    }
}

#[test]
fn atomic_transformation_rule() {
    let ball = fuchsian_ball();
    let d = common::disk();
    let x = base();
    let y = d.point(&[-0.3, 0.2]).unwrap();
    let s = 1.2;
    let mx = ps_approx(ball, &x, s).unwrap();
    let my = ps_approx(ball, &y, s).unwrap();
    let p_x = poincare_partial(ball, &x, s).unwrap();
    let p_o = poincare_partial(ball, &base(), s).unwrap();
    assert!((mx.total_mass - p_x / p_o).abs() < 1e-9);
    for (a, b) in mx.atoms.iter().zip(&my.atoms).step_by(37) {
        let dy = d.hilbert_distance(&y, &a.point).unwrap();
        let expected = (-s * (a.dist - dy)).exp();
        assert!((a.weight / b.weight / expected - 1.0).abs() < 1e-9);
    }
}

#[test]
fn mass_moves_outward_as_s_decreases() {
    let ball = fuchsian_ball();
    let est = estimate_critical_exponent(ball, (3.0, 5.0)).unwrap();
    let rc = ball.radius_complete;
    let mut far_prev = 0.0;
    for ds in [0.3, 0.2, 0.1] {
        let mu = ps_approx(ball, &base(), est.delta_hat + ds).unwrap();
        let far: f64 = mu.atoms.iter().filter(|a| a.dist >= rc - 2.0).map(|a| a.weight).sum();
        let near: f64 = mu.atoms.iter().filter(|a| a.dist <= 2.0).map(|a| a.weight).sum();
        assert!(far > far_prev);
        far_prev = far;
        if ds == 0.1 {
            assert!(far > near, "far {far} near {near}");
        }
    }
}

#[test]
fn shadow_mass_edge_cases() {
    let d = common::disk();
    let x = d.point(&[0.0, 0.0]).unwrap();
    let o = d.point(&[0.6, 0.0]).unwrap();
    let ball = trivial_ball(&x, &o);
    let mu = ps_approx(&ball, &x, 1.0).unwrap();
    let y = d.point(&[0.1, 0.1]).unwrap();
    assert_eq!(shadow_mass(&mu, &y, 2.0).unwrap(), mu.total_mass);
    let far = d.point(&[-0.7, -0.3]).unwrap();
    assert_eq!(shadow_mass(&mu, &far, 0.3).unwrap(), 0.0);
    let on = d.point(&[0.3, 0.0]).unwrap();
    assert_eq!(shadow_mass(&mu, &on, 0.1).unwrap(), mu.total_mass);
}

#[test]
fn shadow_mass_monotone_in_r() {
    let ball = fuchsian_ball();
    let mu = ps_approx(ball, &base(), 1.2).unwrap();
    let e = ball.entries.iter().find(|e| e.dist > 3.0 && e.dist < 3.5).unwrap();
    let mut prev = 0.0;
    for r in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
        let m = shadow_mass(&mu, &e.point, r).unwrap();
        assert!(m >= prev);
        prev = m;
    }
    assert!(prev > 0.0);
}

#[test]
fn shadow_lemma_rows() {
    let ball = fuchsian_ball();
    let est = estimate_critical_exponent(ball, (3.0, 5.0)).unwrap();
    let mu = ps_approx(ball, &base(), est.delta_hat + 0.1).unwrap();
    let opts = ShadowOptions { d_min: 2.0, margin: 2.0, max_rows: 12 };
    let rep = shadow_lemma_report(&mu, ball, 2.0, est.delta_hat, &opts).unwrap();
    assert_eq!(rep.rows.len(), 12);
    let c = rep.empirical_c.unwrap();
    assert!(c.is_finite() && c >= 1.0);
    assert!(rep.rows.iter().all(|r| r.ratio > 0.0 && r.ratio.is_finite()));

    // γ and γ⁻¹ sit at the same distance; their shadows carry comparable mass
    let inverse_of = |i: usize| {
        let inv = ball.entries[i].element.inverse().unwrap();
        ball.entries
            .iter()
            .position(|e| e.element.matrix().iter().zip(inv.matrix().iter()).all(|(a, b)| (a - b).abs() < 1e-7))
            .unwrap()
    };
    for row in rep.rows.iter().take(4) {
        let j = inverse_of(row.index);
        let m = shadow_mass(&mu, &ball.entries[j].point, 2.0).unwrap();
        let ratio = m * (est.delta_hat * ball.entries[j].dist).exp();
        assert!(ratio / row.ratio < 4.0 && row.ratio / ratio < 4.0);
    }

    let d = common::disk();
    let o = d.point(&[0.2, 0.0]).unwrap();
    let tb = trivial_ball(&o, &o);
    let tm = ps_approx(&tb, &o, 1.0).unwrap();
    let empty = shadow_lemma_report(&tm, &tb, 2.0, 0.0, &ShadowOptions::default()).unwrap();
    assert!(empty.rows.is_empty() && empty.empirical_c.is_none());
}

#[test]
fn local_estimates() {
    let ball = fuchsian_ball();
    let d = common::disk();
    let x = base();
    let est = estimate_critical_exponent(ball, (3.0, 5.0)).unwrap();
    let mu = ps_approx(ball, &x, est.delta_hat + 0.1).unwrap();
    let r = 1.5;
    let opts = ShadowOptions { d_min: 2.0, margin: 2.0, max_rows: 6 };
    let shadows = shadow_lemma_report(&mu, ball, r, est.delta_hat, &opts).unwrap();

    // orbit points as probes reproduce the shadow rows
    let probes: Vec<ProjPoint> = shadows.rows.iter().map(|row| ball.entries[row.index].point.clone()).collect();
    let local = local_estimate_report(&mu, ball, r, est.delta_hat, &probes, &opts).unwrap();
    for (a, b) in shadows.rows.iter().zip(&local.rows) {
        assert_eq!(a.mass, b.mass);
    }

    // midpoints of longer segments
    let hi = ball.radius_complete - opts.margin;
    let mids: Vec<ProjPoint> = ball
        .entries
        .iter()
        .filter(|e| e.dist >= 2.0 * opts.d_min && e.dist <= 2.0 * hi)
        .step_by(997)
        .take(6)
        .map(|e| {
            let v = UnitTangent::from_points(&d, &x, &e.point).unwrap();
            flow(&d, &v, e.dist / 2.0).unwrap().foot().clone()
        })
        .collect();
    assert!(!mids.is_empty());
    let rep = local_estimate_report(&mu, ball, r, est.delta_hat, &mids, &opts).unwrap();
    let b = rep.empirical_c.unwrap();
    assert!(b <= shadows.empirical_c.unwrap() * (est.delta_hat * r).exp(), "b {b}");

    let far = d.point(&[0.9999, 0.0]).unwrap();
    let rep = local_estimate_report(&mu, ball, r, est.delta_hat, &[far], &opts).unwrap();
    assert!(rep.rows[0].error.as_deref().unwrap().contains("complete radius"));
}

fn small_measure() -> (AtomicBoundaryMeasure, GroupPresentation) {
    let g = common::fuchsian();
    let ball = enumerate_orbit(&common::disk(), &g, &base(), &base(), 5).unwrap();
    (ps_approx(&ball, &base(), 1.1).unwrap(), g)
}

fn test_box(radius: f64) -> BMBox {
    let d = common::disk();
    let o = base();
    let cell = |c: [f64; 2]| ShadowCell { from: o.clone(), center: d.point(&c).unwrap(), r: radius };
    BMBox { minus: cell([-0.85, 0.0]), plus: cell([0.7, 0.45]), t0: -1.0, t1: 1.0, basepoint: o.clone() }
}

#[test]
fn bm_box_checks() {
    let (mu, g) = small_measure();
    let bx = test_box(0.7);
    let rep = bm_box_report(&mu, &bx, mu.exponent).unwrap();
    assert!(rep.mass > 0.0 && rep.pairs > 0);
    assert!(rep.foot_spread <= 1e-9, "{}", rep.foot_spread);

    let mut wide = bx.clone();
    wide.t0 = -2.0;
    wide.t1 = 2.0;
    assert_eq!(bm_box_mass(&mu, &wide, mu.exponent).unwrap(), 2.0 * rep.mass);

    let flipped = bm_box_mass(&mu, &bx.flipped(), mu.exponent).unwrap();
    assert!((flipped / rep.mass - 1.0).abs() < 1e-9);

    let gen = &g.generators()[0];
    let moved = bm_box_mass(&mu.pushforward(gen).unwrap(), &bx.transformed(gen).unwrap(), mu.exponent).unwrap();
    assert!((moved / rep.mass - 1.0).abs() < 0.01);

    let mut empty = bx.clone();
    empty.plus.center = common::disk().point(&[0.0, -0.999]).unwrap();
    empty.plus.r = 0.01;
    assert_eq!(bm_box_mass(&mu, &empty, mu.exponent).unwrap(), 0.0);
}

#[test]
fn sphere_nets() {
    let d = common::disk();
    let o = d.point(&[0.0, 0.0]).unwrap();
    let coarse = sphere_net_count_with(&d, &o, 0.4, 1.0, 20_000).unwrap();
    let fine = sphere_net_count_with(&d, &o, 0.4, 1.0, 80_000).unwrap();
    assert!(coarse <= 2 && coarse.abs_diff(fine) <= 1);

    let pts: Vec<(f64, f64)> = (2..=6).map(|t| (t as f64, (sphere_net_count(&d, &o, t as f64, 1.0).unwrap() as f64).ln())).collect();
    let (slope, _) = hilbert_core::orbit::linear_fit(&pts);
    assert!((slope - 1.0).abs() < 0.15, "slope {slope}");

    let mut prev = usize::MAX;
    for r in [0.5, 1.0, 1.5, 2.0] {
        let n = sphere_net_count(&d, &o, 4.0, r).unwrap();
        assert!(n <= prev);
        prev = n;
    }

    let s = ConvexDomain::simplex(2).unwrap();
    for t in [2.0, 6.0, 10.0] {
        let per = sphere_net_count(&s, &s.center(), t, 1.0).unwrap() as f64 / t;
        assert!((3.0..=8.0).contains(&per), "{per}");
    }
}
