mod common;

use hilbert_core::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn triangle() -> (ConvexDomain, HexChart) {
    let s = ConvexDomain::simplex(2).unwrap();
    let chart = HexChart::new(&s).unwrap();
    (s, chart)
}

#[test]
fn isometry_against_cross_ratio() {
    let (s, chart) = triangle();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = s.sample_interior(&mut rng, 1.0).unwrap();
        let q = s.sample_interior(&mut rng, 1.0).unwrap();
        let (a, b) = (triangle_to_hex(&chart, &p).unwrap(), triangle_to_hex(&chart, &q).unwrap());
        let d = s.hilbert_distance(&p, &q).unwrap();
        worst = worst.max((hex_norm([a[0] - b[0], a[1] - b[1]]) - d).abs());
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn boundary_points_rejected() {
    let (s, chart) = triangle();
    let edge = s.point(&[0.5, 0.0]).unwrap();
    assert_eq!(triangle_to_hex(&chart, &edge).unwrap_err(), GeomError::NotInterior);
}

fn collinearity_residual(pts: &[[f64; 2]]) -> f64 {
    let (a, b, c) = (pts[0], pts[1], pts[2]);
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    cross.abs() / (hex_norm([b[0] - a[0], b[1] - a[1]]) * hex_norm([c[0] - a[0], c[1] - a[1]]))
}

#[test]
fn medians_map_to_lines() {
    let (s, chart) = triangle();
    let c = s.chart_coords(&s.center()).unwrap();
    for v in s.vertex_coords() {
        let pts: Vec<[f64; 2]> = [0.2, 0.5, 0.9]
            .iter()
            .map(|t| {
                let p = s.point(&[c[0] + t * (v[0] - c[0]), c[1] + t * (v[1] - c[1])]).unwrap();
                triangle_to_hex(&chart, &p).unwrap()
            })
            .collect();
        assert!(collinearity_residual(&pts) < 1e-12);
    }
    // a generic line through the centre bends
    let w = [c[0] + 0.2, c[1] - 0.05];
    let pts: Vec<[f64; 2]> = [-0.8, 0.3, 1.0]
        .iter()
        .map(|t| triangle_to_hex(&chart, &s.point(&[c[0] + t * (w[0] - c[0]), c[1] + t * (w[1] - c[1])]).unwrap()).unwrap())
        .collect();
    assert!(collinearity_residual(&pts) > 1e-3);
}

#[test]
fn lattice_translations() {
    let (_, chart) = triangle();
    let g = common::group("flat_z2_simplex.json");
    let ts: Vec<[f64; 2]> = g.generators().iter().step_by(2).map(|m| chart.translation_of(m).unwrap()).collect();
    let l = 0.5 * 16f64.ln();
    for t in &ts {
        assert!((hex_norm(*t) - l).abs() < 1e-12);
    }
    assert!(hex_norm([ts[0][0] + ts[1][0] - ts[2][0], ts[0][1] + ts[1][1] - ts[2][1]]) < 1e-12);
    assert!(flat_net_count(ts[0], ts[1], 2.0, 20.0).is_ok());
}

#[test]
fn net_counts_quasi_linear() {
    let unit = ([1.0, 0.0], [0.0, 1.0]);
    let per: Vec<f64> = [10.0, 20.0, 40.0, 80.0].iter().map(|&r| flat_net_count(unit.0, unit.1, 2.0, r).unwrap() as f64 / r).collect();
    assert!(per.iter().all(|p| (1.0..=2.0).contains(p)), "{per:?}");

    // rescaling the lattice and the ball together halves the count
    for r in [10.0, 40.0] {
        let n = flat_net_count(unit.0, unit.1, 2.0, r).unwrap();
        let m = flat_net_count([2.0, 0.0], [0.0, 2.0], 4.0, r).unwrap();
        assert!((2 * m).abs_diff(n) <= 4, "{n} {m}");
    }
    assert_eq!(flat_net_count(unit.0, unit.1, 2.0, 2.0).unwrap(), 1);
}

proptest! {
    #[test]
    fn hex_norm_axioms(a in prop::array::uniform2(-50.0f64..50.0), b in prop::array::uniform2(-50.0f64..50.0), j in -6i32..6, neg: bool) {
        // power-of-two scalings are exact in floating point
        let k = if neg { -2f64.powi(j) } else { 2f64.powi(j) };
        prop_assert_eq!(hex_norm([k * a[0], k * a[1]]), k.abs() * hex_norm(a));
        prop_assert!(hex_norm([a[0] + b[0], a[1] + b[1]]) <= hex_norm(a) + hex_norm(b) + 1e-12);
        prop_assert!(hex_norm(a) >= 0.0);
    }
}
