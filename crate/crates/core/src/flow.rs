//! The geodesic flow along projective lines.

use crate::domain::{BoundaryPoint, ConvexDomain};
use crate::error::{GeomError, Result};
use crate::projective::{axpy, dd, ddiv, dot, norm, recip, scale, sub, to_f64, Dd, ProjPoint, ProjTransform};

/// A flow state: an interior foot point and a unit chart direction.
#[derive(Clone, Debug)]
pub struct UnitTangent {
    foot: ProjPoint,
    direction: Vec<Dd>,
}

impl UnitTangent {
    /// `direction` is a chart vector; it is normalized here.
    pub fn new(foot: ProjPoint, direction: &[f64]) -> Result<Self> {
        let d: Vec<Dd> = direction.iter().map(|&v| dd(v)).collect();
        Self::from_dd(foot, d)
    }

    pub(crate) fn from_dd(foot: ProjPoint, direction: Vec<Dd>) -> Result<Self> {
        if direction.len() + 1 != foot.ambient_dim() {
            return Err(GeomError::DimensionMismatch { expected: foot.dim(), got: direction.len() });
        }
        let n = norm(&direction);
        if to_f64(n) <= 0.0 || !n.hi().is_finite() {
            return Err(GeomError::InvalidInput("zero direction".into()));
        }
        Ok(Self { foot, direction: scale(&direction, recip(n)) })
    }

    /// Tangent at `x` pointing towards `y`.
    pub fn from_points(domain: &ConvexDomain, x: &ProjPoint, y: &ProjPoint) -> Result<Self> {
        let xl = domain.interior_lift(x)?;
        let yl = domain.normalize(y)?;
        let u = sub(&yl, &xl);
        Self::from_dd(x.clone(), u[..domain.dim()].to_vec())
    }

    /// Tangent at `x` pointing towards the boundary point `xi`.
    pub fn towards(domain: &ConvexDomain, x: &ProjPoint, xi: &BoundaryPoint) -> Result<Self> {
        let xl = domain.interior_lift(x)?;
        let u = sub(xi.lift(), &xl);
        Self::from_dd(x.clone(), u[..domain.dim()].to_vec())
    }

    pub fn foot(&self) -> &ProjPoint {
        &self.foot
    }

    pub fn direction(&self) -> Vec<f64> {
        self.direction.iter().map(|v| to_f64(*v)).collect()
    }

    /// Same foot, opposite direction.
    pub fn reversed(&self) -> Self {
        Self { foot: self.foot.clone(), direction: self.direction.iter().map(|v| -*v).collect() }
    }

    /// Image under a projective map, in the chart of `target` (the image
    /// domain, or the same domain when `t` preserves it).
    pub fn transformed(&self, source: &ConvexDomain, target: &ConvexDomain, t: &ProjTransform) -> Result<Self> {
        let line = Line::new(source, self)?;
        let tm = t.matrix();
        let tx = crate::projective::mat_vec(tm, &line.x);
        let tu = crate::projective::mat_vec(tm, &line.u);
        let chart = target.chart();
        let fx = chart.eval(&tx);
        let fu = chart.eval(&tu);
        let x2 = scale(&tx, recip(fx));
        let u2 = axpy(&scale(&tu, recip(fx)), -ddiv(fu, fx), &x2);
        let foot = ProjPoint::from_dd(x2)?;
        Self::from_dd(foot, u2[..target.dim()].to_vec())
    }

    pub fn approx_eq(&self, other: &UnitTangent, tol: f64) -> bool {
        self.foot.approx_eq(&other.foot, tol)
            && self.direction.iter().zip(&other.direction).all(|(a, b)| to_f64(*a - *b).abs() <= tol)
    }
}

/// A flow line through a normalized foot lift `x` with tangent lift `u`,
/// exit parameters `alpha` (backward) and `beta` (forward) and the boundary
/// endpoints `minus = x - αu`, `plus = x + βu`.
#[derive(Clone, Debug)]
pub(crate) struct Line {
    pub x: Vec<Dd>,
    pub u: Vec<Dd>,
    pub alpha: Dd,
    pub beta: Dd,
    pub minus: BoundaryPoint,
    pub plus: BoundaryPoint,
}

impl Line {
    pub fn new(domain: &ConvexDomain, v: &UnitTangent) -> Result<Self> {
        let x = domain.interior_lift(&v.foot)?;
        let u = domain.chart().lift_direction_dd(&v.direction);
        Self::from_lifts(domain, x, u)
    }

    pub fn from_lifts(domain: &ConvexDomain, x: Vec<Dd>, u: Vec<Dd>) -> Result<Self> {
        let back: Vec<Dd> = u.iter().map(|c| -*c).collect();
        let (minus, alpha) = domain.hit(&x, &back)?;
        let (plus, beta) = domain.hit(&x, &u)?;
        Ok(Self { x, u, alpha, beta, minus, plus })
    }

    /// The ray from `x` to the boundary point `b`, keeping `b` itself as the
    /// forward endpoint.
    pub fn to_boundary(domain: &ConvexDomain, x: Vec<Dd>, b: &BoundaryPoint) -> Result<Self> {
        let u = sub(b.lift(), &x);
        let back: Vec<Dd> = u.iter().map(|c| -*c).collect();
        let (minus, alpha) = domain.hit(&x, &back)?;
        Ok(Self { x, u, alpha, beta: dd(1.0), minus, plus: b.clone() })
    }

    /// Lift of the point at signed Hilbert time `t`.
    ///
    /// Solving `½ log[a:x:y:b] = t` gives a Möbius function of `e^{2t}`; it is
    /// written relative to the endpoint being approached so that points near
    /// the boundary keep their distance to it.
    pub fn at(&self, t: f64) -> Vec<Dd> {
        if t == 0.0 {
            return self.x.clone();
        }
        let (a, b) = (self.alpha, self.beta);
        let e = dd((2.0 * t.abs()).exp());
        if t > 0.0 {
            let rem = ddiv(b * (a + b), b + a * e);
            axpy(self.plus.lift(), -rem, &self.u)
        } else {
            let rem = ddiv(a * (a + b), a + b * e);
            axpy(self.minus.lift(), rem, &self.u)
        }
    }

    pub fn endpoints(&self) -> (BoundaryPoint, BoundaryPoint) {
        (self.minus.clone(), self.plus.clone())
    }
}

/// Backward and forward boundary endpoints `(v⁻, v⁺)` of the flow line.
pub fn endpoints(domain: &ConvexDomain, v: &UnitTangent) -> Result<(BoundaryPoint, BoundaryPoint)> {
    Ok(Line::new(domain, v)?.endpoints())
}

/// The geodesic flow `φ^t(v)`.
pub fn flow(domain: &ConvexDomain, v: &UnitTangent, t: f64) -> Result<UnitTangent> {
    if t == 0.0 {
        return Ok(v.clone());
    }
    let line = Line::new(domain, v)?;
    let foot = ProjPoint::from_dd(line.at(t))?;
    Ok(UnitTangent { foot, direction: v.direction.clone() })
}

/// Golden-section search for the minimum of a quasiconvex function on
/// `[lo, hi]`, to width `tol` or `max_iter` steps.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
        for cand in [(c, fc), (d, fd)] {
            if cand.1 < best.1 {
                best = cand;
            }
        }
    }
    best
}

/// Largest flow time used when bracketing along rays; beyond it points are
/// closer to the boundary than double-double coordinates resolve.
pub(crate) const T_MAX: f64 = 26.0;

/// Minimum of `d(p(t), y)` over `t` in `[0, t_end]` along a flow line, with
/// `t_end = None` meaning the whole forward ray.
pub(crate) fn min_dist_along(domain: &ConvexDomain, line: &Line, y: &[Dd], t_end: Option<f64>) -> f64 {
    let g = |t: f64| domain.distance_lifts(&line.at(t), y);
    let g0 = g(0.0);
    let limit = t_end.unwrap_or(T_MAX).min(T_MAX);
    if limit <= 0.0 {
        return g0;
    }
    // geometric doubling until the function turns upward
    let mut prev = 0.0;
    let mut h = limit.min(0.25);
    let mut gh = g(h);
    if gh >= g0 {
        let (_, v) = golden_min(g, 0.0, h, 1e-11, 200);
        return v.min(g0);
    }
    loop {
        let next = (2.0 * h).min(limit);
        if next <= h {
            let (_, v) = golden_min(g, prev, h, 1e-11, 200);
            return v.min(gh);
        }
        let gn = g(next);
        if gn >= gh {
            let (_, v) = golden_min(g, prev, next, 1e-11, 200);
            return v.min(gh);
        }
        prev = h;
        h = next;
        gh = gn;
    }
}

/// `inf_{t ≥ 0} d(ray_{x,ξ}(t), y)`, by bracketing and golden-section search.
pub fn min_dist_to_ray(domain: &ConvexDomain, x: &ProjPoint, xi: &BoundaryPoint, y: &ProjPoint) -> Result<f64> {
    let xl = domain.interior_lift(x)?;
    let yl = domain.interior_lift(y)?;
    let line = Line::to_boundary(domain, xl, xi)?;
    Ok(min_dist_along(domain, &line, &yl, None))
}

/// Chart-direction cosine between two tangents at the same foot; used by
/// tests and diagnostics.
pub fn direction_cosine(v: &UnitTangent, w: &UnitTangent) -> f64 {
    to_f64(dot(&v.direction, &w.direction))
}
