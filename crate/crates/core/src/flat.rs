//! The open triangle as the plane with the hexagonal norm, and cover counts
//! of hexagonal spheres by lattice translates.

use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::projective::{dot_f, to_f64, ProjPoint, ProjTransform};

/// Logarithmic chart of a projective triangle.
///
/// With facet values `h_i(p) > 0`, the Hilbert distance is half the spread
/// of `log(h_i(q)/h_i(p))`, so `p ↦ ½(log h₀/h₂, log h₁/h₂)` is an isometry
/// onto the plane with `max(|u₁|, |u₂|, |u₁ - u₂|)`.
#[derive(Clone, Debug)]
pub struct HexChart {
    simplex: ConvexDomain,
    origin: [f64; 2],
}

impl HexChart {
    /// Chart of a triangle, normalized so the centre of the triangle maps to
    /// the origin.
    pub fn new(simplex: &ConvexDomain) -> Result<Self> {
        if simplex.dim() != 2 || !simplex.is_polytope() || simplex.facets().len() != 3 {
            return Err(GeomError::InvalidInput("hex charts need a triangle".into()));
        }
        let mut chart = Self { simplex: simplex.clone(), origin: [0.0, 0.0] };
        chart.origin = chart.raw(&simplex.center())?;
        Ok(chart)
    }

    pub fn simplex(&self) -> &ConvexDomain {
        &self.simplex
    }

    fn raw(&self, p: &ProjPoint) -> Result<[f64; 2]> {
        let lift = self.simplex.interior_lift(p)?;
        let h: Vec<f64> = self.simplex.facets().iter().map(|f| to_f64(dot_f(f, &lift))).collect();
        if h.iter().any(|v| *v <= 0.0) {
            return Err(GeomError::NotInterior);
        }
        Ok([0.5 * (h[0] / h[2]).ln(), 0.5 * (h[1] / h[2]).ln()])
    }

    /// Translation vector of a map preserving each side of the triangle.
    pub fn translation_of(&self, t: &ProjTransform) -> Result<[f64; 2]> {
        let c = self.simplex.center();
        let a = triangle_to_hex(self, &c)?;
        let b = triangle_to_hex(self, &t.apply(&c)?)?;
        let v = [b[0] - a[0], b[1] - a[1]];
        // a second point must move by the same vector
        let cc = self.simplex.chart_coords(&c)?;
        let v0 = &self.simplex.vertex_coords()[0];
        let q = self.simplex.point(&[0.5 * (cc[0] + v0[0]), 0.5 * (cc[1] + v0[1])])?;
        let qa = triangle_to_hex(self, &q)?;
        let qb = triangle_to_hex(self, &t.apply(&q)?)?;
        if hex_norm([qb[0] - qa[0] - v[0], qb[1] - qa[1] - v[1]]) > 1e-9 {
            return Err(GeomError::InvalidInput("map does not act as a translation of the triangle".into()));
        }
        Ok(v)
    }
}

/// Image of an interior point of the triangle in the hexagonal plane.
pub fn triangle_to_hex(chart: &HexChart, p: &ProjPoint) -> Result<[f64; 2]> {
    let u = chart.raw(p)?;
    Ok([u[0] - chart.origin[0], u[1] - chart.origin[1]])
}

/// The norm with unit ball the hexagon `(±1,0), (±1,±1), (0,±1)`.
pub fn hex_norm(u: [f64; 2]) -> f64 {
    u[0].abs().max(u[1].abs()).max((u[0] - u[1]).abs())
}

fn hex_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    hex_norm([a[0] - b[0], a[1] - b[1]])
}

/// Largest hexagonal distance from a point of the plane to the lattice,
/// estimated on a grid over the fundamental parallelogram.
pub fn covering_radius(t1: [f64; 2], t2: [f64; 2]) -> f64 {
    let n = 64;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            let p = [a * t1[0] + b * t2[0], a * t1[1] + b * t2[1]];
            let near = [[0.0, 0.0], t1, t2, [t1[0] + t2[0], t1[1] + t2[1]]]
                .iter()
                .map(|c| hex_dist(p, *c))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(near);
        }
    }
    worst
}

/// Greedy count of lattice translates of `B(0, R)` covering the hexagonal
/// sphere `S(0, r)`, walking its six sides.
pub fn flat_net_count(t1: [f64; 2], t2: [f64; 2], big_r: f64, r: f64) -> Result<usize> {
    let det = t1[0] * t2[1] - t1[1] * t2[0];
    let scale = hex_norm(t1).max(hex_norm(t2));
    if !(det.abs() > 1e-12 * scale * scale) {
        return Err(GeomError::DegenerateLattice);
    }
    if big_r <= 0.0 || covering_radius(t1, t2) > big_r {
        return Err(GeomError::DegenerateLattice);
    }
    if r <= 0.0 {
        return Err(GeomError::Precondition("r must be positive".into()));
    }
    if r <= big_r {
        return Ok(1);
    }
    // perimeter samples, side by side
    let corners = [[r, 0.0], [r, r], [0.0, r], [-r, 0.0], [-r, -r], [0.0, -r]];
    let step = (big_r.min(hex_norm(t1)).min(hex_norm(t2)) / 32.0).min(r / 8.0);
    let per_side = (r / step).ceil() as usize;
    let mut samples = Vec::with_capacity(6 * per_side);
    for k in 0..6 {
        let (a, b) = (corners[k], corners[(k + 1) % 6]);
        for i in 0..per_side {
            let s = i as f64 / per_side as f64;
            samples.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    // lattice coordinates of a point
    let inv = |p: [f64; 2]| [(p[0] * t2[1] - p[1] * t2[0]) / det, (t1[0] * p[1] - t1[1] * p[0]) / det];
    let span = {
        // |u|₂ ≤ √2·hex_norm(u); bound lattice coordinates of points within R
        let col = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
        let inv_norm = (col([t2[1] / det, -t1[1] / det]) + col([-t2[0] / det, t1[0] / det])).max(1e-300);
        (std::f64::consts::SQRT_2 * big_r * inv_norm).ceil() as i64 + 1
    };
    let m = samples.len();
    let mut covered = vec![false; m];
    let mut count = 0;
    for i in 0..m {
        if covered[i] {
            continue;
        }
        let p = samples[i];
        let base = inv(p);
        let (b0, b1) = (base[0].round() as i64, base[1].round() as i64);
        let mut best: Option<([f64; 2], usize)> = None;
        for k1 in b0 - span..=b0 + span {
            for k2 in b1 - span..=b1 + span {
                let c = [k1 as f64 * t1[0] + k2 as f64 * t2[0], k1 as f64 * t1[1] + k2 as f64 * t2[1]];
                if hex_dist(p, c) > big_r {
                    continue;
                }
                let mut run = 0;
                while run < m && hex_dist(samples[(i + run) % m], c) <= big_r {
                    run += 1;
                }
                if best.is_none_or(|(_, b)| run > b) {
                    best = Some((c, run));
                }
            }
        }
        let (c, _) = best.ok_or(GeomError::DegenerateLattice)?;
        count += 1;
        for (j, s) in samples.iter().enumerate() {
            if hex_dist(*s, c) <= big_r {
                covered[j] = true;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_norm_examples() {
        assert_eq!(hex_norm([0.0, 0.0]), 0.0);
        assert_eq!(hex_norm([1.0, 1.0]), 1.0);
        assert_eq!(hex_norm([1.0, -1.0]), 2.0);
    }

    #[test]
    fn barycenter_to_origin() {
        let s = ConvexDomain::simplex(2).unwrap();
        let chart = HexChart::new(&s).unwrap();
        let u = triangle_to_hex(&chart, &s.center()).unwrap();
        assert!(hex_norm(u) < 1e-15);
    }

    #[test]
    fn small_spheres_take_one_ball() {
        assert_eq!(flat_net_count([1.0, 0.0], [0.0, 1.0], 2.0, 1.5).unwrap(), 1);
        assert_eq!(flat_net_count([1.0, 0.0], [2.0, 0.0], 2.0, 5.0).unwrap_err(), GeomError::DegenerateLattice);
        assert_eq!(flat_net_count([5.0, 0.0], [0.0, 5.0], 2.0, 5.0).unwrap_err(), GeomError::DegenerateLattice);
    }
}
