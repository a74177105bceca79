//! Finite-orbit approximations of Patterson-Sullivan densities, shadow
//! masses and their reports, sphere nets, and the Bowen-Margulis measure of
//! boxes.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{busemann_lifts, require_proper_extremal};
use crate::domain::{BoundaryPoint, ConvexDomain};
use crate::error::{GeomError, Result};
use crate::flow::{min_dist_along, Line};
use crate::orbit::{pairwise_sum, OrbitBall};
use crate::projective::{add, dd, ddiv, lower, mat_vec, scale, sub, to_f64, Dd, ProjPoint, ProjTransform};

/// One Dirac mass of an [`AtomicBoundaryMeasure`].
#[derive(Clone, Debug)]
pub struct Atom {
    pub point: ProjPoint,
    pub weight: f64,
    /// `d(x, point)` for the viewpoint `x`.
    pub dist: f64,
    /// Forward hit of the line from the viewpoint through the atom; `None`
    /// for an atom sitting at the viewpoint itself.
    pub direction: Option<BoundaryPoint>,
}

/// `μ_{x,s} = P(o,o,s)⁻¹ Σ e^{-s d(x, γo)} δ_{γo}` over an enumerated ball.
#[derive(Clone, Debug)]
pub struct AtomicBoundaryMeasure {
    pub domain: ConvexDomain,
    pub viewpoint: ProjPoint,
    pub basepoint: ProjPoint,
    pub exponent: f64,
    pub atoms: Vec<Atom>,
    pub total_mass: f64,
    /// Atoms at the viewpoint, which carry no direction.
    pub undirected: usize,
    /// Unit chart directions from the viewpoint, used to prefilter shadows.
    chart_dirs: Vec<Option<Vec<f64>>>,
}

fn chart_direction(domain: &ConvexDomain, from: &[Dd], to: &[Dd]) -> Option<Vec<f64>> {
    let n = domain.dim();
    let d: Vec<f64> = lower(&sub(to, from)).into_iter().take(n).collect();
    let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len == 0.0 {
        None
    } else {
        Some(d.into_iter().map(|v| v / len).collect())
    }
}

fn chart_cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Atoms at `γo` weighted by `e^{-s d(x, γo)} / P(o, o, s)`.
pub fn ps_approx(ball: &OrbitBall, x: &ProjPoint, s: f64) -> Result<AtomicBoundaryMeasure> {
    if ball.is_empty() {
        return Err(GeomError::EmptyBall);
    }
    if s < 0.0 {
        return Err(GeomError::Precondition("s must be nonnegative".into()));
    }
    let domain = &ball.domain;
    let xl = domain.interior_lift(x)?;
    let from_o = ball.distances_for(&ball.basepoint)?;
    let norm = pairwise_sum(&from_o.iter().map(|d| (-s * d).exp()).collect::<Vec<_>>());
    let dists = ball.distances_for(x)?;
    let built: Vec<(Atom, Option<Vec<f64>>)> = ball
        .entries
        .par_iter()
        .zip(dists.par_iter())
        .map(|(e, &dist)| {
            let pl = domain.interior_lift(&e.point)?;
            let u = sub(&pl, &xl);
            let at_x = dist == 0.0 || e.point.approx_eq(x, 1e-14);
            let (direction, dir) = if at_x {
                (None, None)
            } else {
                let (bp, _) = domain.hit(&xl, &u)?;
                (Some(bp), chart_direction(domain, &xl, &pl))
            };
            let weight = (-s * dist).exp() / norm;
            Ok((Atom { point: e.point.clone(), weight, dist, direction }, dir))
        })
        .collect::<Result<Vec<_>>>()?;
    let (atoms, chart_dirs): (Vec<Atom>, Vec<Option<Vec<f64>>>) = built.into_iter().unzip();
    let total_mass = pairwise_sum(&atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
    let undirected = atoms.iter().filter(|a| a.direction.is_none()).count();
    Ok(AtomicBoundaryMeasure {
        domain: domain.clone(),
        viewpoint: x.clone(),
        basepoint: ball.basepoint.clone(),
        exponent: s,
        atoms,
        total_mass,
        undirected,
        chart_dirs,
    })
}

fn transform_boundary(domain: &ConvexDomain, g: &ProjTransform, b: &BoundaryPoint) -> Result<BoundaryPoint> {
    let image = ProjPoint::from_dd(mat_vec(g.matrix(), b.lift()))?;
    domain.boundary_from_lift(domain.normalize(&image)?)
}

impl AtomicBoundaryMeasure {
    /// The pushforward `γ_* μ_x`, re-expressed from the same viewpoint `x`
    /// through the transformation rule: the atom moved to `γξ` has its
    /// weight multiplied by `e^{-s β_{γξ}(x, γx)}`. Atoms without a
    /// direction keep their weight.
    pub fn pushforward(&self, g: &ProjTransform) -> Result<Self> {
        let domain = &self.domain;
        let xl = domain.interior_lift(&self.viewpoint)?;
        let gx = g.apply(&self.viewpoint)?;
        let gxl = domain.interior_lift(&gx)?;
        let moved: Vec<(Atom, Option<Vec<f64>>)> = self
            .atoms
            .par_iter()
            .map(|a| {
                let point = g.apply(&a.point)?;
                let pl = domain.interior_lift(&point)?;
                let dist = domain.distance_lifts(&xl, &pl);
                match &a.direction {
                    None => Ok((Atom { point, weight: a.weight, dist, direction: None }, None)),
                    Some(b) => {
                        let gb = transform_boundary(domain, g, b)?;
                        let bp = require_proper_extremal(domain, &gb)?;
                        let beta = busemann_lifts(domain, &bp, &xl, &gxl)?;
                        let dir = chart_direction(domain, &xl, bp.lift());
                        let weight = a.weight * (-self.exponent * beta).exp();
                        Ok((Atom { point, weight, dist, direction: Some(bp) }, dir))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let (atoms, chart_dirs): (Vec<Atom>, Vec<Option<Vec<f64>>>) = moved.into_iter().unzip();
        let total_mass = pairwise_sum(&atoms.iter().map(|a| a.weight).collect::<Vec<_>>());
        Ok(Self { atoms, chart_dirs, total_mass, ..self.clone() })
    }
}

/// Directions from `x` that may meet a ball around `y`.
enum Cone {
    /// Every direction.
    All,
    /// Planar: signed angles to `axis` within `[lo, hi]`.
    Arc { axis: Vec<f64>, lo: f64, hi: f64 },
    /// Cosine with `axis` at least `min`.
    Round { axis: Vec<f64>, min: f64 },
}

fn signed_angle(axis: &[f64], d: &[f64]) -> f64 {
    (axis[0] * d[1] - axis[1] * d[0]).atan2(chart_cosine(axis, d))
}

impl Cone {
    fn admits(&self, d: &[f64]) -> bool {
        match self {
            Cone::All => true,
            Cone::Arc { axis, lo, hi } => {
                let a = signed_angle(axis, d);
                a >= *lo && a <= *hi
            }
            Cone::Round { axis, min } => chart_cosine(axis, d) >= *min,
        }
    }

    /// Cone spanned from `xl` by sampled points of the sphere `S(y, radius)`.
    /// For a sphere of radius above `r` its hull contains `B(y, r)`; for a
    /// smaller radius the hull lies inside `B(y, r)`.
    fn of_sphere(domain: &ConvexDomain, xl: &[Dd], yl: &[Dd], radius: f64, outer: bool) -> Result<Cone> {
        let axis = match chart_direction(domain, xl, yl) {
            Some(a) => a,
            None => return Ok(Cone::All),
        };
        if domain.distance_lifts(xl, yl) <= radius + 1e-9 {
            return Ok(if outer { Cone::All } else { Cone::Arc { axis, lo: 0.0, hi: -1.0 } });
        }
        let n = domain.dim();
        let dirs = sample_directions(n, if n == 2 { 256 } else { 600 });
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        let mut min = 1.0f64;
        for d in dirs {
            let u = domain.chart().lift_direction(&d);
            let p = Line::from_lifts(domain, yl.to_vec(), u)?.at(radius);
            if let Some(c) = chart_direction(domain, xl, &p) {
                min = min.min(chart_cosine(&c, &axis));
                if n == 2 {
                    let a = signed_angle(&axis, &c);
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
            }
        }
        Ok(match (n, outer) {
            (2, true) => Cone::Arc { axis, lo: lo - 1e-12, hi: hi + 1e-12 },
            (2, false) => Cone::Arc { axis, lo: lo + 1e-12, hi: hi - 1e-12 },
            (_, true) if min > 0.0 => Cone::Round { axis, min: min - 1e-12 },
            (_, true) => Cone::All,
            // no cheap inner cone off the plane
            (_, false) => Cone::Arc { axis, lo: 0.0, hi: -1.0 },
        })
    }
}

/// Unit vectors: an angle grid in dimension 2, a Fibonacci sphere in 3, and
/// `±1` in dimension 1.
fn sample_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => fibonacci_sphere(count),
    }
}

fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let rad = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            vec![rad * th.cos(), rad * th.sin(), z]
        })
        .collect()
}

/// Total weight of the atoms whose segment from the viewpoint meets
/// `B(y, r)`.
pub fn shadow_mass(mu: &AtomicBoundaryMeasure, y: &ProjPoint, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(GeomError::Precondition("r must be positive".into()));
    }
    let domain = &mu.domain;
    let xl = domain.interior_lift(&mu.viewpoint)?;
    let yl = domain.interior_lift(y)?;
    let d_xy = domain.distance_lifts(&xl, &yl);
    if d_xy < r {
        return Ok(mu.total_mass);
    }
    // a slightly larger and a slightly smaller sphere bracket the shadow
    let r_out = 1.05 * r + 0.05;
    let r_in = 0.95 * r - 0.05;
    let outer = Cone::of_sphere(domain, &xl, &yl, r_out, true)?;
    let inner = if r_in > 0.0 { Some(Cone::of_sphere(domain, &xl, &yl, r_in, false)?) } else { None };
    let hits: Vec<bool> = mu
        .atoms
        .par_iter()
        .zip(mu.chart_dirs.par_iter())
        .map(|(a, dir)| {
            let (b, dir) = match (&a.direction, dir) {
                (Some(b), Some(dir)) => (b, dir),
                _ => return Ok(false),
            };
            // the segment is too short to reach the ball
            if a.dist < d_xy - r {
                return Ok(false);
            }
            if !outer.admits(dir) {
                return Ok(false);
            }
            // long enough to cross the inner hull, which sits inside the ball
            if let Some(inner) = &inner {
                if a.dist >= d_xy + r_in && inner.admits(dir) {
                    return Ok(true);
                }
            }
            let pl = domain.interior_lift(&a.point)?;
            if domain.distance_lifts(&pl, &yl) < r {
                return Ok(true);
            }
            let line = Line::to_boundary(domain, xl.clone(), b)?;
            Ok(min_dist_along(domain, &line, &yl, Some(a.dist)) < r)
        })
        .collect::<Result<Vec<_>>>()?;
    let masses: Vec<f64> = mu.atoms.iter().zip(&hits).filter(|(_, h)| **h).map(|(a, _)| a.weight).collect();
    Ok(pairwise_sum(&masses))
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowRow {
    /// Entry index in the ball, or probe index.
    pub index: usize,
    pub d: f64,
    pub mass: f64,
    /// `mass · e^{δ̂ d}`.
    pub ratio: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowReport {
    pub r: f64,
    pub delta_hat: f64,
    pub rows: Vec<ShadowRow>,
    /// `max(ratio, 1/ratio)` over rows with positive mass.
    pub empirical_c: Option<f64>,
    pub empty_rows: usize,
}

#[derive(Clone, Debug)]
pub struct ShadowOptions {
    pub d_min: f64,
    /// Rows stop this far short of the complete radius.
    pub margin: f64,
    /// Rows are thinned to at most this many, evenly in `d`.
    pub max_rows: usize,
}

impl Default for ShadowOptions {
    fn default() -> Self {
        Self { d_min: 3.0, margin: 2.0, max_rows: 64 }
    }
}

fn check_viewpoint(mu: &AtomicBoundaryMeasure, ball: &OrbitBall) -> Result<()> {
    if !mu.viewpoint.approx_eq(&ball.viewpoint, 1e-12) {
        return Err(GeomError::Precondition("measure and ball need the same viewpoint".into()));
    }
    Ok(())
}

fn thin<T: Clone>(items: Vec<T>, max: usize) -> Vec<T> {
    if items.len() <= max || max == 0 {
        return items;
    }
    (0..max).map(|k| items[k * (items.len() - 1) / (max - 1).max(1)].clone()).collect()
}

fn finish_report(r: f64, delta_hat: f64, rows: Vec<ShadowRow>) -> ShadowReport {
    let mut c: Option<f64> = None;
    let mut empty_rows = 0;
    for row in rows.iter().filter(|row| row.error.is_none()) {
        if row.mass > 0.0 {
            let v = row.ratio.max(1.0 / row.ratio);
            c = Some(c.map_or(v, |c: f64| c.max(v)));
        } else {
            empty_rows += 1;
        }
    }
    ShadowReport { r, delta_hat, rows, empirical_c: c, empty_rows }
}

/// Ratios `μ_x(𝒪_r(x, γo)) e^{δ̂ d(x, γo)}` over the ball entries with `d`
/// between `d_min` and `radius_complete - margin`.
pub fn shadow_lemma_report(mu: &AtomicBoundaryMeasure, ball: &OrbitBall, r: f64, delta_hat: f64, opts: &ShadowOptions) -> Result<ShadowReport> {
    check_viewpoint(mu, ball)?;
    let hi = ball.radius_complete - opts.margin;
    let mut picked: Vec<(usize, f64)> = ball
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.dist >= opts.d_min && e.dist <= hi)
        .map(|(i, e)| (i, e.dist))
        .collect();
    picked.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let picked = thin(picked, opts.max_rows);
    let mut rows = Vec::with_capacity(picked.len());
    for (i, d) in picked {
        let mass = shadow_mass(mu, &ball.entries[i].point, r)?;
        rows.push(ShadowRow { index: i, d, mass, ratio: mass * (delta_hat * d).exp(), error: None });
    }
    Ok(finish_report(r, delta_hat, rows))
}

/// The same ratio table for arbitrary interior probes; probes outside the
/// admissible distance range give error rows.
pub fn local_estimate_report(
    mu: &AtomicBoundaryMeasure,
    ball: &OrbitBall,
    r: f64,
    delta_hat: f64,
    probes: &[ProjPoint],
    opts: &ShadowOptions,
) -> Result<ShadowReport> {
    check_viewpoint(mu, ball)?;
    let hi = ball.radius_complete - opts.margin;
    let mut rows = Vec::with_capacity(probes.len());
    for (i, y) in probes.iter().enumerate() {
        let d = mu.domain.hilbert_distance(&mu.viewpoint, y)?;
        let error = if d > hi {
            Some(GeomError::IncompleteRadius { requested: d, complete: hi }.to_string())
        } else if d < opts.d_min {
            Some(GeomError::Precondition(format!("probe distance {d} below d_min")).to_string())
        } else {
            None
        };
        if error.is_some() {
            rows.push(ShadowRow { index: i, d, mass: 0.0, ratio: 0.0, error });
            continue;
        }
        let mass = shadow_mass(mu, y, r)?;
        rows.push(ShadowRow { index: i, d, mass, ratio: mass * (delta_hat * d).exp(), error: None });
    }
    Ok(finish_report(r, delta_hat, rows))
}

/// A boundary cell: the shadow `𝒪_r(from, center)`.
#[derive(Clone, Debug)]
pub struct ShadowCell {
    pub from: ProjPoint,
    pub center: ProjPoint,
    pub r: f64,
}

impl ShadowCell {
    pub fn contains(&self, domain: &ConvexDomain, xi: &BoundaryPoint) -> Result<bool> {
        Ok(crate::flow::min_dist_to_ray(domain, &self.from, xi, &self.center)? < self.r)
    }

    pub fn transformed(&self, g: &ProjTransform) -> Result<Self> {
        Ok(Self { from: g.apply(&self.from)?, center: g.apply(&self.center)?, r: self.r })
    }
}

/// Flow states with `v⁻` in `minus`, `v⁺` in `plus` and Hopf time
/// `β_{v⁺}(basepoint, πv)` in `[t0, t1]`.
#[derive(Clone, Debug)]
pub struct BMBox {
    pub minus: ShadowCell,
    pub plus: ShadowCell,
    pub t0: f64,
    pub t1: f64,
    pub basepoint: ProjPoint,
}

impl BMBox {
    pub fn transformed(&self, g: &ProjTransform) -> Result<Self> {
        Ok(Self {
            minus: self.minus.transformed(g)?,
            plus: self.plus.transformed(g)?,
            t0: self.t0,
            t1: self.t1,
            basepoint: g.apply(&self.basepoint)?,
        })
    }

    /// The same set of lines traversed backwards.
    pub fn flipped(&self) -> Self {
        Self { minus: self.plus.clone(), plus: self.minus.clone(), t0: -self.t1, t1: -self.t0, basepoint: self.basepoint.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BMReport {
    pub mass: f64,
    pub pairs: usize,
    /// Pairs dropped by the regularity filter.
    pub skipped: usize,
    pub minus_atoms: usize,
    pub plus_atoms: usize,
    /// Largest relative spread of the integrand between the feet at `t0`,
    /// the midpoint and `t1`.
    pub foot_spread: f64,
}

fn cell_atoms(mu: &AtomicBoundaryMeasure, cell: &ShadowCell) -> Result<Vec<(BoundaryPoint, f64)>> {
    let flags: Vec<Option<(BoundaryPoint, f64)>> = mu
        .atoms
        .par_iter()
        .map(|a| match &a.direction {
            Some(b) if cell.contains(&mu.domain, b)? => Ok(Some((b.clone(), a.weight))),
            _ => Ok(None),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(flags.into_iter().flatten().collect())
}

/// `Σ w⁻ w⁺ (t1 - t0) e^{δ (β_{ξ⁺}(x, p) + β_{ξ⁻}(x, p))}` over atom pairs,
/// `p` the foot at the middle of the box on the line `ξ⁻ξ⁺`.
pub fn bm_box_report(mu: &AtomicBoundaryMeasure, bbox: &BMBox, delta: f64) -> Result<BMReport> {
    if bbox.t1 <= bbox.t0 {
        return Err(GeomError::DegenerateWindow("box needs t1 > t0".into()));
    }
    let domain = &mu.domain;
    let xl = domain.interior_lift(&mu.viewpoint)?;
    let bl = domain.interior_lift(&bbox.basepoint)?;
    let regular = |v: Vec<(BoundaryPoint, f64)>| -> (Vec<(BoundaryPoint, f64)>, usize) {
        let before = v.len();
        let kept: Vec<_> = v.into_iter().filter_map(|(b, w)| require_proper_extremal(domain, &b).ok().map(|b| (b, w))).collect();
        let dropped = before - kept.len();
        (kept, dropped)
    };
    let (minus, dm) = regular(cell_atoms(mu, &bbox.minus)?);
    let (plus, dp) = regular(cell_atoms(mu, &bbox.plus)?);
    let mut report = BMReport { mass: 0.0, pairs: 0, skipped: 0, minus_atoms: minus.len(), plus_atoms: plus.len(), foot_spread: 0.0 };
    if minus.is_empty() || plus.is_empty() {
        report.skipped = dm * plus.len() + dp * minus.len();
        return Ok(report);
    }
    let len = bbox.t1 - bbox.t0;
    let mid = 0.5 * (bbox.t0 + bbox.t1);
    let pairs: Vec<(usize, usize)> = (0..minus.len()).flat_map(|i| (0..plus.len()).map(move |j| (i, j))).collect();
    let terms: Vec<Option<(f64, f64)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (bm, wm) = &minus[i];
            let (bp, wp) = &plus[j];
            if bm.approx_eq(bp, 1e-12) {
                return Ok(None);
            }
            // a point of the open segment, if the line crosses Ω at all
            let p0 = scale(&add(bm.lift(), bp.lift()), dd(0.5));
            if !domain.lift_inside(&p0, 0.0) {
                return Ok(None);
            }
            let line = Line::to_boundary(domain, p0.clone(), bp)?;
            // lines grazing the boundary leave no room for the incidence
            // construction; such pairs are counted as irregular
            let c = match busemann_lifts(domain, bp, &bl, &p0) {
                Ok(c) => c,
                Err(GeomError::IncidenceDegenerate) => return Ok(None),
                Err(e) => return Err(e),
            };
            let weight = |t: f64| -> Result<f64> {
                let p = line.at(t - c);
                let e = busemann_lifts(domain, bp, &xl, &p)? + busemann_lifts(domain, bm, &xl, &p)?;
                Ok((delta * e).exp())
            };
            let evaluated = [mid, bbox.t0, bbox.t1].iter().map(|t| weight(*t)).collect::<Result<Vec<_>>>();
            let w = match evaluated {
                Ok(w) => w,
                Err(GeomError::IncidenceDegenerate) => return Ok(None),
                Err(e) => return Err(e),
            };
            let spread = w[1..].iter().map(|v| (v - w[0]).abs() / w[0]).fold(0.0, f64::max);
            Ok(Some((wm * wp * len * w[0], spread)))
        })
        .collect::<Result<Vec<_>>>()?;
    let valid: Vec<(f64, f64)> = terms.iter().flatten().cloned().collect();
    report.pairs = valid.len();
    report.skipped = terms.len() - valid.len() + dm * plus.len() + dp * minus.len();
    if valid.is_empty() {
        return Err(GeomError::NoTransversal);
    }
    report.mass = pairwise_sum(&valid.iter().map(|v| v.0).collect::<Vec<_>>());
    report.foot_spread = valid.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(report)
}

/// Mass of the box under the atomic Bowen-Margulis measure; zero when a
/// cell catches no atoms.
pub fn bm_box_mass(mu: &AtomicBoundaryMeasure, bbox: &BMBox, delta: f64) -> Result<f64> {
    Ok(bm_box_report(mu, bbox, delta)?.mass)
}

/// `C e^{2δR} e^{-δr} N_r`.
pub fn triangle_mass_bound(delta: f64, big_r: f64, r: f64, n_r: usize, c: f64) -> Result<f64> {
    if delta < 0.0 || big_r < 0.0 || r < 0.0 {
        return Err(GeomError::Precondition("δ, R and r must be nonnegative".into()));
    }
    Ok(c * (2.0 * delta * big_r - delta * r).exp() * n_r as f64)
}

/// A closed curve through ∂Ω for planar domains, parameterized by `[0, 1)`.
enum BoundaryCurve {
    Ellipse { reference: Vec<Dd> },
    Polygon { corners: Vec<Vec<Dd>>, edges: Vec<usize> },
}

impl BoundaryCurve {
    fn new(domain: &ConvexDomain) -> Result<Self> {
        if !domain.is_polytope() {
            return Ok(Self::Ellipse { reference: domain.reference_lift().to_vec() });
        }
        let centre = domain.chart_coords(&domain.center())?;
        let mut corners: Vec<(f64, Vec<Dd>)> = domain
            .vertex_points()
            .iter()
            .map(|v| {
                let c = domain.chart_coords(v)?;
                Ok(((c[1] - centre[1]).atan2(c[0] - centre[0]), domain.normalize(v)?))
            })
            .collect::<Result<Vec<_>>>()?;
        corners.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let corners: Vec<Vec<Dd>> = corners.into_iter().map(|c| c.1).collect();
        let k = corners.len();
        let tight = |v: &[Dd], h: &[f64]| to_f64(crate::projective::dot_f(h, v)).abs() <= 1e-9;
        let edges = (0..k)
            .map(|i| {
                let (a, b) = (&corners[i], &corners[(i + 1) % k]);
                domain
                    .facets()
                    .iter()
                    .position(|h| tight(a, h) && tight(b, h))
                    .ok_or_else(|| GeomError::InvalidInput("polygon corners are not joined by an edge".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Polygon { corners, edges })
    }

    fn at(&self, domain: &ConvexDomain, u: Dd) -> Result<BoundaryPoint> {
        match self {
            Self::Ellipse { reference } => {
                let th = 2.0 * std::f64::consts::PI * to_f64(u);
                let dir = domain.chart().lift_direction(&[th.cos(), th.sin()]);
                Ok(domain.hit(reference, &dir)?.0)
            }
            Self::Polygon { corners, edges } => {
                let k = corners.len();
                let s = u * dd(k as f64);
                // hi may round up to an integer while lo is negative
                let mut i = (s.hi().floor() as usize).min(k - 1);
                if (s - dd(i as f64)) < dd(0.0) && i > 0 {
                    i -= 1;
                }
                let f = (s - dd(i as f64)).max(dd(0.0)).min(dd(1.0));
                let (a, b) = (&corners[i], &corners[(i + 1) % k]);
                let lift = add(a, &scale(&sub(b, a), f));
                if f.hi() == 0.0 {
                    domain.boundary_from_lift(lift)
                } else {
                    domain.boundary_on_facets(lift, vec![edges[i]])
                }
            }
        }
    }
}

/// Default number of initial boundary samples for sphere nets.
pub fn default_sphere_samples(dim: usize) -> usize {
    match dim {
        1 => 2,
        2 => 20_000,
        _ => 200_000,
    }
}

/// Size of a greedy maximal `r`-separated subset of the sphere `S(x, t)`.
pub fn sphere_net_count(domain: &ConvexDomain, x: &ProjPoint, t: f64, r: f64) -> Result<usize> {
    sphere_net_count_with(domain, x, t, r, default_sphere_samples(domain.dim()))
}

/// [`sphere_net_count`] with an explicit number of initial samples. In
/// dimension 2 the sample list is refined until consecutive sphere points
/// are within `r/4`.
pub fn sphere_net_count_with(domain: &ConvexDomain, x: &ProjPoint, t: f64, r: f64, samples: usize) -> Result<usize> {
    if !(t > 0.0 && r > 0.0) {
        return Err(GeomError::Precondition("need t > 0 and r > 0".into()));
    }
    let xl = domain.interior_lift(x)?;
    let points = match domain.dim() {
        1 => {
            let u = domain.chart().lift_direction(&[1.0]);
            let line = Line::from_lifts(domain, xl, u)?;
            vec![line.at(t), line.at(-t)]
        }
        2 => planar_sphere(domain, &xl, t, r, samples.max(8))?,
        3 => spatial_sphere(domain, &xl, t, r, samples.max(8))?,
        n => return Err(GeomError::InvalidInput(format!("sphere nets need dimension 1 to 3, got {n}"))),
    };
    Ok(greedy_net(domain, &points, r))
}

fn planar_sphere(domain: &ConvexDomain, xl: &[Dd], t: f64, r: f64, samples: usize) -> Result<Vec<Vec<Dd>>> {
    let curve = BoundaryCurve::new(domain)?;
    let point = |u: Dd| -> Result<Vec<Dd>> {
        let b = curve.at(domain, u)?;
        Ok(Line::to_boundary(domain, xl.to_vec(), &b)?.at(t))
    };
    // double-double division is not correctly rounded; pin the closing end
    let mut params: Vec<Dd> = (0..=samples).map(|i| ddiv(dd(i as f64), dd(samples as f64))).collect();
    params[samples] = dd(1.0);
    let coarse: Vec<Vec<Dd>> = params.par_iter().map(|u| point(*u)).collect::<Result<Vec<_>>>()?;
    let limit = r / 4.0;
    let refine = |i: usize| -> Result<Vec<Vec<Dd>>> {
        let mut out = Vec::new();
        let mut stack = vec![(params[i], coarse[i].clone(), params[i + 1], coarse[i + 1].clone())];
        // depth-first, right half pushed first so points come out in order
        while let Some((u0, p0, u1, p1)) = stack.pop() {
            let gap = domain.distance_lifts(&p0, &p1);
            if gap <= limit {
                out.push(p1);
                continue;
            }
            if to_f64(u1 - u0) < 1e-30 {
                return Err(GeomError::UnderResolved { spacing: gap, limit });
            }
            let um = (u0 + u1) * dd(0.5);
            let pm = point(um)?;
            stack.push((um, pm.clone(), u1, p1));
            stack.push((u0, p0, um, pm));
        }
        Ok(out)
    };
    let pieces: Vec<Vec<Vec<Dd>>> = (0..samples).into_par_iter().map(refine).collect::<Result<Vec<_>>>()?;
    let mut points = vec![coarse[0].clone()];
    for piece in pieces {
        points.extend(piece);
    }
    // the last point closes the curve onto the first
    points.pop();
    Ok(points)
}

fn spatial_sphere(domain: &ConvexDomain, xl: &[Dd], t: f64, r: f64, samples: usize) -> Result<Vec<Vec<Dd>>> {
    let dirs = fibonacci_sphere(samples);
    let points: Vec<Vec<Dd>> = dirs
        .par_iter()
        .map(|d| {
            let u = domain.chart().lift_direction(d);
            Ok(Line::from_lifts(domain, xl.to_vec(), u)?.at(t))
        })
        .collect::<Result<Vec<_>>>()?;
    // spacing probe: nearest sampled neighbours of a subset of samples
    let limit = r / 4.0;
    let step = (samples / 256).max(1);
    let worst = (0..samples)
        .step_by(step)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&i| {
            let mut near: Vec<(f64, usize)> = dirs.iter().enumerate().filter(|(j, _)| *j != i).map(|(j, d)| (-chart_cosine(d, &dirs[i]), j)).collect();
            near.select_nth_unstable_by(6, |a, b| a.partial_cmp(b).unwrap());
            near[..6].iter().map(|(_, j)| domain.distance_lifts(&points[i], &points[*j])).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    if worst > limit {
        return Err(GeomError::UnderResolved { spacing: worst, limit });
    }
    Ok(points)
}

fn greedy_net(domain: &ConvexDomain, points: &[Vec<Dd>], r: f64) -> usize {
    let mut kept: Vec<&Vec<Dd>> = Vec::new();
    for p in points {
        // recent points are the likely near neighbours
        if kept.iter().rev().all(|q| domain.distance_lifts(p, q) >= r) {
            kept.push(p);
        }
    }
    kept.len()
}
