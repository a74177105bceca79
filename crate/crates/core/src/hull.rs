//! Convex hulls in dimensions 2 and 3, and the approximate domain spanned by
//! the attracting fixed points of a group.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::orbit::{biproximal_lines, bfs_elements, GroupPresentation, DEFAULT_MAX_ENTRIES};
use crate::projective::{AffineChart, ProjPoint};

/// A hull given by its vertices and inward unit half-spaces `a·x + b ≥ 0`.
#[derive(Clone, Debug)]
pub struct Hull {
    pub vertices: Vec<Vec<f64>>,
    pub half_spaces: Vec<Vec<f64>>,
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain hull; vertices counter-clockwise.
pub fn hull_2d(points: &[Vec<f64>]) -> Result<Hull> {
    let mut pts: Vec<Vec<f64>> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return Err(GeomError::DegenerateLimitSet);
    }
    let scale = pts.iter().flatten().fold(0f64, |m, v| m.max(v.abs())).max(1.0);
    let eps = 1e-12 * scale * scale;
    let mut lower: Vec<Vec<f64>> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross2(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<Vec<f64>> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross2(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(GeomError::DegenerateLimitSet);
    }
    let n = lower.len();
    let half_spaces = (0..n)
        .map(|i| {
            let (p, q) = (&lower[i], &lower[(i + 1) % n]);
            // inward normal of a counter-clockwise edge
            let (a, b) = (-(q[1] - p[1]), q[0] - p[0]);
            let s = (a * a + b * b).sqrt();
            vec![a / s, b / s, -(a * p[0] + b * p[1]) / s]
        })
        .collect();
    Ok(Hull { vertices: lower, half_spaces })
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Incremental hull in dimension 3.
pub fn hull_3d(points: &[Vec<f64>]) -> Result<Hull> {
    let pts = points;
    let scale = pts.iter().flatten().fold(0f64, |m, v| m.max(v.abs())).max(1.0);
    let eps = 1e-11 * scale;
    // initial tetrahedron
    let i0 = 0;
    let i1 = (0..pts.len()).max_by(|&a, &b| {
        let da = dot3(sub3(&pts[a], &pts[i0]), sub3(&pts[a], &pts[i0]));
        let db = dot3(sub3(&pts[b], &pts[i0]), sub3(&pts[b], &pts[i0]));
        da.partial_cmp(&db).unwrap()
    });
    let i1 = i1.ok_or(GeomError::DegenerateLimitSet)?;
    let e = sub3(&pts[i1], &pts[i0]);
    let area = |k: usize| {
        let c = cross3(e, sub3(&pts[k], &pts[i0]));
        dot3(c, c).sqrt()
    };
    let i2 = (0..pts.len()).max_by(|&a, &b| area(a).partial_cmp(&area(b)).unwrap()).unwrap();
    if area(i2) <= eps * eps.sqrt() {
        return Err(GeomError::DegenerateLimitSet);
    }
    let nrm = cross3(e, sub3(&pts[i2], &pts[i0]));
    let vol = |k: usize| dot3(nrm, sub3(&pts[k], &pts[i0]));
    let i3 = (0..pts.len()).max_by(|&a, &b| vol(a).abs().partial_cmp(&vol(b).abs()).unwrap()).unwrap();
    if vol(i3).abs() <= eps * eps {
        return Err(GeomError::DegenerateLimitSet);
    }
    let centre: Vec<f64> = (0..3).map(|j| (pts[i0][j] + pts[i1][j] + pts[i2][j] + pts[i3][j]) / 4.0).collect();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let n = cross3(sub3(&pts[f[1]], &pts[f[0]]), sub3(&pts[f[2]], &pts[f[0]]));
        if dot3(n, sub3(&centre, &pts[f[0]])) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    for f in [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]] {
        faces.push(orient(f));
    }
    let outward = |f: &[usize; 3]| cross3(sub3(&pts[f[1]], &pts[f[0]]), sub3(&pts[f[2]], &pts[f[0]]));
    for k in 0..pts.len() {
        if [i0, i1, i2, i3].contains(&k) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| {
                let n = outward(f);
                let len = dot3(n, n).sqrt();
                dot3(n, sub3(&pts[k], &pts[f[0]])) > eps * len
            })
            .collect();
        if !visible.iter().any(|v| *v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, v) in faces.iter().zip(&visible) {
            if *v {
                for j in 0..3 {
                    edges.insert((f[j], f[(j + 1) % 3]));
                }
            }
        }
        let horizon: Vec<(usize, usize)> = {
            let mut h: Vec<(usize, usize)> = edges.iter().filter(|(a, b)| !edges.contains(&(*b, *a))).cloned().collect();
            h.sort();
            h
        };
        let mut kept: Vec<[usize; 3]> = faces.iter().zip(&visible).filter(|(_, v)| !**v).map(|(f, _)| *f).collect();
        for (a, b) in horizon {
            kept.push([a, b, k]);
        }
        faces = kept;
    }
    // merge coplanar faces into facets
    let mut half_spaces: Vec<Vec<f64>> = Vec::new();
    let mut used: Vec<usize> = Vec::new();
    for f in &faces {
        let n = outward(f);
        let len = dot3(n, n).sqrt();
        let inward = [-n[0] / len, -n[1] / len, -n[2] / len];
        let h = vec![inward[0], inward[1], inward[2], -dot3(inward, [pts[f[0]][0], pts[f[0]][1], pts[f[0]][2]])];
        if !half_spaces.iter().any(|g| g.iter().zip(&h).all(|(x, y)| (x - y).abs() < 1e-9)) {
            half_spaces.push(h);
        }
        used.extend_from_slice(f);
    }
    used.sort();
    used.dedup();
    // drop vertices that sit inside a merged facet's relative interior
    let vertices: Vec<Vec<f64>> = used
        .iter()
        .map(|&i| pts[i].clone())
        .filter(|v| {
            half_spaces
                .iter()
                .filter(|h| (h[0] * v[0] + h[1] * v[1] + h[2] * v[2] + h[3]).abs() <= 1e-9)
                .count()
                >= 3
        })
        .collect();
    Ok(Hull { vertices, half_spaces })
}

/// Polytope spanned by the attracting fixed points of the biproximal group
/// elements of word length at most `depth`, in the standard chart. The seed
/// only fixes the ambient dimension.
pub fn limit_set_hull(group: &GroupPresentation, depth: usize, seed: &ProjPoint) -> Result<ConvexDomain> {
    let size = seed.ambient_dim();
    let n = size - 1;
    if !(2..=3).contains(&n) && n != 1 {
        return Err(GeomError::InvalidInput("hulls are supported in dimensions 1 to 3".into()));
    }
    let (elements, _) = bfs_elements(group, size, depth, DEFAULT_MAX_ENTRIES, |_, _| true, |_| None)?;
    if elements.len() <= 1 {
        return Err(GeomError::DegenerateLimitSet);
    }
    let chart = AffineChart::standard(n);
    let lines: Vec<Option<Vec<f64>>> = elements.par_iter().map(|(g, _)| biproximal_lines(g.matrix()).map(|(att, _)| att)).collect();
    let any_proximal = lines.iter().any(|l| l.is_some());
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    let mut points: Vec<Vec<f64>> = Vec::new();
    for att in lines.into_iter().flatten() {
        let Ok(c) = ProjPoint::new(&att).and_then(|p| chart.coords_of(&p)) else { continue };
        if seen.insert(c.iter().map(|v| (v * 1e9).round() as i64).collect()) {
            points.push(c);
        }
    }
    if !any_proximal {
        return Err(GeomError::NoDominantEigenvalue);
    }
    if points.len() < n + 2 && n > 1 {
        return Err(GeomError::DegenerateLimitSet);
    }
    let hull = match n {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            if hi - lo < 1e-9 {
                return Err(GeomError::DegenerateLimitSet);
            }
            Hull { vertices: vec![vec![lo], vec![hi]], half_spaces: vec![vec![1.0, -lo], vec![-1.0, hi]] }
        }
        2 => hull_2d(&points)?,
        _ => hull_3d(&points)?,
    };
    ConvexDomain::polytope(&hull.half_spaces, &hull.vertices).map_err(|_| GeomError::DegenerateLimitSet)
}
