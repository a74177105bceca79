mod common;

use hilbert_core::*;

fn circle_gap(d: &ConvexDomain) -> f64 {
    // Hausdorff distance between the polygon and the unit circle
    let verts = d.vertex_coords();
    let mut gap = verts.iter().map(|v| (1.0 - (v[0] * v[0] + v[1] * v[1]).sqrt()).abs()).fold(0.0, f64::max);
    for h in d.facets() {
        // distance from the circle to the chord on the far side of the edge
        let n = (h[0] * h[0] + h[1] * h[1]).sqrt();
        gap = gap.max(1.0 - h[2].abs() / n);
    }
    gap
}

#[test]
fn fuchsian_hull_approaches_the_circle() {
    let g = common::fuchsian();
    let seed = ProjPoint::new(&[0.0, 0.0, 1.0]).unwrap();
    let gaps: Vec<f64> = (6..=8).map(|k| circle_gap(&limit_set_hull(&g, k, &seed).unwrap())).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    let h = limit_set_hull(&g, 8, &seed).unwrap();
    for v in h.vertex_coords() {
        assert!(((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() < 1e-9);
    }
}

