//! Properly convex open domains: ellipsoids, polytopes and simplices.
//!
//! Every domain lives in an affine chart. Internally points are handled as
//! lifts normalized to the chart hyperplane `functional = 1`; lines of the
//! chart are then straight lines of that hyperplane and the boundary is the
//! zero set of a quadric or of the facet covectors.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::projective::{
    axpy, dd, ddiv, dot, dot_f, lift_f64, lower, mat_vec, norm, recip, scale, sub, to_f64, AffineChart, Dd,
    ProjPoint, ProjTransform,
};
use crate::EPS_GEOM;

/// Tolerance for incidence of points with facets and the quadric.
const INCIDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Ellipsoid,
    Polytope,
    Simplex,
}

/// An open properly convex domain in an affine chart.
#[derive(Clone, Debug)]
pub struct ConvexDomain {
    kind: DomainKind,
    dim: usize,
    chart: AffineChart,
    /// Homogeneous quadric, negative on the domain (ellipsoids only).
    quadric: Option<DMatrix<f64>>,
    /// Unit covectors, positive on the domain (polytopes only).
    facets: Vec<Vec<f64>>,
    /// Chart-normalized vertex lifts (polytopes only).
    vertices: Vec<Vec<Dd>>,
    /// A chart-normalized interior point.
    reference: Vec<Dd>,
}

/// A point of ∂Ω together with the facets containing it (polytopes).
#[derive(Clone, Debug)]
pub struct BoundaryPoint {
    point: ProjPoint,
    lift: Vec<Dd>,
    facets: Vec<usize>,
}

impl BoundaryPoint {
    pub fn point(&self) -> &ProjPoint {
        &self.point
    }

    /// Indices of the facets through this point; empty for ellipsoids.
    pub fn facets(&self) -> &[usize] {
        &self.facets
    }

    pub(crate) fn lift(&self) -> &[Dd] {
        &self.lift
    }

    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        self.point.approx_eq(&other.point, tol)
    }
}

/// A hyperplane meeting the closure of Ω but not Ω, given by a unit covector
/// that is nonnegative on the closure.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportingHyperplane {
    pub covector: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryClassification {
    pub proper: bool,
    pub extremal: bool,
}

impl BoundaryClassification {
    pub fn is_proper_extremal(&self) -> bool {
        self.proper && self.extremal
    }
}

/// JSON description of a domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Ellipsoid {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        shape: Option<Vec<Vec<f64>>>,
    },
    Simplex {
        dim: usize,
    },
    /// Half-spaces are covectors `(a_1..a_n, b)` meaning `a·x + b > 0`.
    /// Vertices of length n are chart points of the standard chart; length
    /// n + 1 are homogeneous, and the chart is then the sum of the facets.
    Polytope {
        half_spaces: Vec<Vec<f64>>,
        vertices: Vec<Vec<f64>>,
    },
}

impl DomainSpec {
    pub fn build(&self) -> Result<ConvexDomain> {
        match self {
            DomainSpec::Ellipsoid { dim, center, shape } => {
                let n = *dim;
                let c = center.clone().unwrap_or_else(|| vec![0.0; n]);
                let m = match shape {
                    None => DMatrix::identity(n, n),
                    Some(rows) => {
                        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                            return Err(GeomError::InvalidInput("shape must be dim x dim".into()));
                        }
                        DMatrix::from_fn(n, n, |i, j| rows[i][j])
                    }
                };
                ConvexDomain::ellipsoid(&c, &m)
            }
            DomainSpec::Simplex { dim } => ConvexDomain::simplex(*dim),
            DomainSpec::Polytope { half_spaces, vertices } => {
                ConvexDomain::polytope(half_spaces, vertices)
            }
        }
    }
}

impl ConvexDomain {
    /// `{ x : (x - c)ᵀ M (x - c) < 1 }` in the standard chart.
    pub fn ellipsoid(center: &[f64], shape: &DMatrix<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 || shape.nrows() != n || shape.ncols() != n {
            return Err(GeomError::InvalidInput("ellipsoid dimensions disagree".into()));
        }
        if (shape - shape.transpose()).norm() > EPS_GEOM * shape.norm()
            || shape.clone().cholesky().is_none()
        {
            return Err(GeomError::InvalidInput("shape must be symmetric positive definite".into()));
        }
        let c = nalgebra::DVector::from_column_slice(center);
        let mc = shape * &c;
        let mut q = DMatrix::zeros(n + 1, n + 1);
        q.view_mut((0, 0), (n, n)).copy_from(shape);
        for i in 0..n {
            q[(i, n)] = -mc[i];
            q[(n, i)] = -mc[i];
        }
        q[(n, n)] = c.dot(&mc) - 1.0;
        let chart = AffineChart::standard(n);
        let reference = chart.lift(center)?;
        Ok(Self {
            kind: DomainKind::Ellipsoid,
            dim: n,
            chart,
            quadric: Some(q),
            facets: Vec::new(),
            vertices: Vec::new(),
            reference,
        })
    }

    /// The unit ball of the standard chart (the projective model of
    /// hyperbolic space).
    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::ellipsoid(&vec![0.0; dim], &DMatrix::identity(dim, dim))
    }

    /// The projectivized positive orthant `{ x_i > 0 }` in the chart
    /// `Σ x_i = 1`, so chart coordinates are the first n barycentric
    /// coordinates.
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GeomError::InvalidInput("simplex dimension must be positive".into()));
        }
        let m = dim + 1;
        let chart = AffineChart::new(vec![1.0; m])?;
        let facets: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let vertices = facets.iter().map(|f| lift_f64(f)).collect();
        let reference = vec![recip(dd(m as f64)); m];
        Ok(Self {
            kind: DomainKind::Simplex,
            dim,
            chart,
            quadric: None,
            facets,
            vertices,
            reference,
        })
    }

    /// A polytope from its H- and V-representations, checked for mutual
    /// consistency.
    pub fn polytope(half_spaces: &[Vec<f64>], vertices: &[Vec<f64>]) -> Result<Self> {
        let m = half_spaces.first().map(|h| h.len()).unwrap_or(0);
        if m < 2 || half_spaces.iter().any(|h| h.len() != m) {
            return Err(GeomError::InvalidInput("half-spaces need equal length >= 2".into()));
        }
        let n = m - 1;
        let facets: Vec<Vec<f64>> = half_spaces
            .iter()
            .map(|h| {
                let s = h.iter().map(|v| v * v).sum::<f64>().sqrt();
                if s == 0.0 {
                    Err(GeomError::InvalidInput("zero half-space covector".into()))
                } else {
                    Ok(h.iter().map(|v| v / s).collect())
                }
            })
            .collect::<Result<_>>()?;
        let homogeneous = vertices.first().map(|v| v.len() == m).unwrap_or(false);
        let chart = if homogeneous {
            let f: Vec<f64> = (0..m).map(|j| facets.iter().map(|h| h[j]).sum()).collect();
            AffineChart::new(f)?
        } else {
            AffineChart::standard(n)
        };
        let mut lifts = Vec::with_capacity(vertices.len());
        for v in vertices {
            let lift = if homogeneous {
                if v.len() != m {
                    return Err(GeomError::DimensionMismatch { expected: m, got: v.len() });
                }
                chart.normalize(&lift_f64(v))?
            } else {
                chart.lift(v)?
            };
            lifts.push(lift);
        }
        Self::from_parts(DomainKind::Polytope, n, chart, facets, lifts)
    }

    pub(crate) fn from_parts(
        kind: DomainKind,
        dim: usize,
        chart: AffineChart,
        facets: Vec<Vec<f64>>,
        vertices: Vec<Vec<Dd>>,
    ) -> Result<Self> {
        if vertices.len() < dim + 1 || facets.len() < dim + 1 {
            return Err(GeomError::InvalidInput("polytope needs at least dim + 1 vertices and facets".into()));
        }
        // plain f64 is accurate enough at the incidence tolerance
        let lowered: Vec<Vec<f64>> = vertices.iter().map(|v| lower(v)).collect();
        let val = |h: &[f64], v: &[f64]| h.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        lowered.par_iter().try_for_each(|v| {
            let mut tight = 0;
            for h in &facets {
                let x = val(h, v);
                if x < -INCIDENCE_TOL {
                    return Err(GeomError::InvalidInput("vertex violates a half-space".into()));
                }
                if x.abs() <= INCIDENCE_TOL {
                    tight += 1;
                }
            }
            if tight < dim {
                return Err(GeomError::InvalidInput("vertex is tight on fewer than dim facets".into()));
            }
            Ok(())
        })?;
        facets.par_iter().try_for_each(|h| {
            let on = lowered.iter().filter(|v| val(h, v).abs() <= INCIDENCE_TOL).count();
            if on < dim {
                return Err(GeomError::InvalidInput("facet contains fewer than dim vertices".into()));
            }
            Ok(())
        })?;
        let mut reference = vec![dd(0.0); dim + 1];
        for v in &vertices {
            reference = axpy(&reference, dd(1.0 / vertices.len() as f64), v);
        }
        let domain = Self { kind, dim, chart, quadric: None, facets, vertices, reference };
        if !domain.lift_inside(&domain.reference, EPS_GEOM) {
            return Err(GeomError::InvalidInput("polytope has empty interior".into()));
        }
        Ok(domain)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart(&self) -> &AffineChart {
        &self.chart
    }

    pub fn quadric(&self) -> Option<&DMatrix<f64>> {
        self.quadric.as_ref()
    }

    pub fn facets(&self) -> &[Vec<f64>] {
        &self.facets
    }

    pub fn vertex_points(&self) -> Vec<ProjPoint> {
        self.vertices.iter().filter_map(|v| ProjPoint::from_dd(v.clone()).ok()).collect()
    }

    /// Chart coordinates of the vertices.
    pub fn vertex_coords(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| lower(&v[..self.dim])).collect()
    }

    pub fn is_polytope(&self) -> bool {
        self.quadric.is_none()
    }

    /// Interior reference point (centre or vertex centroid).
    pub fn center(&self) -> ProjPoint {
        ProjPoint::from_dd(self.reference.clone()).expect("reference point is nonzero")
    }

    /// Point with the given chart coordinates.
    pub fn point(&self, chart: &[f64]) -> Result<ProjPoint> {
        self.chart.point(chart)
    }

    pub fn chart_coords(&self, p: &ProjPoint) -> Result<Vec<f64>> {
        self.chart.coords_of(p)
    }

    pub(crate) fn check_dim(&self, p: &ProjPoint) -> Result<()> {
        if p.ambient_dim() != self.dim + 1 {
            return Err(GeomError::DimensionMismatch { expected: self.dim + 1, got: p.ambient_dim() });
        }
        Ok(())
    }

    pub(crate) fn normalize(&self, p: &ProjPoint) -> Result<Vec<Dd>> {
        self.check_dim(p)?;
        self.chart.normalize_point(p)
    }

    /// Quadric value of a normalized lift, scaled so the reference point has
    /// value -1.
    fn quadric_value(&self, q: &DMatrix<f64>, x: &[Dd]) -> Dd {
        dot(x, &mat_vec(q, x))
    }

    /// Signed boundary function of a normalized lift: negative inside for the
    /// ellipsoid (quadric value), and minus the smallest facet value for
    /// polytopes.
    pub(crate) fn level(&self, x: &[Dd]) -> Dd {
        match &self.quadric {
            Some(q) => self.quadric_value(q, x),
            None => {
                let mut best = dot_f(&self.facets[0], x);
                for h in &self.facets[1..] {
                    let v = dot_f(h, x);
                    if v < best {
                        best = v;
                    }
                }
                -best
            }
        }
    }

    pub(crate) fn lift_inside(&self, x: &[Dd], margin: f64) -> bool {
        to_f64(self.level(x)) < -margin
    }

    /// Strictly interior lift, no margin; used as the precondition of the
    /// metric routines.
    pub(crate) fn interior_lift(&self, p: &ProjPoint) -> Result<Vec<Dd>> {
        let x = self.normalize(p).map_err(|e| match e {
            GeomError::ChartUndefined => GeomError::NotInterior,
            e => e,
        })?;
        if self.level(&x).hi() < 0.0 {
            Ok(x)
        } else {
            Err(GeomError::NotInterior)
        }
    }

    /// True iff `x` lies in the open interior with margin `EPS_GEOM`.
    pub fn contains(&self, x: &ProjPoint) -> Result<bool> {
        self.contains_with_margin(x, EPS_GEOM)
    }

    pub fn contains_with_margin(&self, x: &ProjPoint, margin: f64) -> Result<bool> {
        let lift = self.normalize(x)?;
        Ok(self.lift_inside(&lift, margin))
    }

    /// True iff the point is interior with no margin at all.
    pub fn strictly_contains(&self, x: &ProjPoint) -> bool {
        self.interior_lift(x).is_ok()
    }

    /// Smallest `σ > 0` with `x + σ u` on ∂Ω, plus the facets hit.
    pub(crate) fn exit(&self, x: &[Dd], u: &[Dd]) -> Result<(Dd, Vec<usize>)> {
        match &self.quadric {
            Some(q) => {
                let qu = mat_vec(q, u);
                let a = dot(u, &qu);
                let b = dot(x, &qu);
                let c = self.quadric_value(q, x);
                if a.hi() <= 0.0 {
                    return Err(GeomError::CoincidentPoints);
                }
                if c.hi() >= 0.0 {
                    return Err(GeomError::NotInterior);
                }
                let disc = (b * b - a * c).sqrt();
                let sigma = if b.hi() >= 0.0 { -ddiv(c, b + disc) } else { ddiv(disc - b, a) };
                Ok((sigma, Vec::new()))
            }
            None => {
                let mut best: Option<Dd> = None;
                let mut cands: Vec<(usize, Dd)> = Vec::new();
                for (i, h) in self.facets.iter().enumerate() {
                    let hu = dot_f(h, u);
                    if hu.hi() < 0.0 {
                        let hx = dot_f(h, x);
                        let s = -ddiv(hx, hu);
                        cands.push((i, s));
                        if best.is_none_or(|b| s < b) {
                            best = Some(s);
                        }
                    }
                }
                let sigma = best.ok_or(GeomError::CoincidentPoints)?;
                if sigma.hi() <= 0.0 {
                    return Err(GeomError::NotInterior);
                }
                let hit = axpy(x, sigma, u);
                let mut active: Vec<usize> = Vec::new();
                for (i, h) in self.facets.iter().enumerate() {
                    if to_f64(dot_f(h, &hit)).abs() <= INCIDENCE_TOL {
                        active.push(i);
                    }
                }
                if active.is_empty() {
                    active = cands.iter().filter(|(_, s)| *s == sigma).map(|(i, _)| *i).collect();
                }
                Ok((sigma, active))
            }
        }
    }

    /// Exit parameter from `base + offset` along `u`, with `base` taken to lie
    /// exactly on ∂Ω. Serves points closer to the boundary than coordinates
    /// can resolve.
    pub(crate) fn exit_offset(&self, base: &BoundaryPoint, offset: &[Dd], u: &[Dd]) -> Result<Dd> {
        let z = crate::projective::add(&base.lift, offset);
        match &self.quadric {
            Some(q) => {
                let qu = mat_vec(q, u);
                let a = dot(u, &qu);
                let b = dot(&z, &qu);
                let qe = mat_vec(q, offset);
                let c = dd(2.0) * dot(&base.lift, &qe) + dot(offset, &qe);
                if a.hi() <= 0.0 {
                    return Err(GeomError::CoincidentPoints);
                }
                if c.hi() >= 0.0 {
                    return Err(GeomError::NotInterior);
                }
                let disc = (b * b - a * c).sqrt();
                Ok(if b.hi() >= 0.0 { -ddiv(c, b + disc) } else { ddiv(disc - b, a) })
            }
            None => {
                let mut best: Option<Dd> = None;
                for (i, h) in self.facets.iter().enumerate() {
                    let hu = dot_f(h, u);
                    if hu.hi() < 0.0 {
                        let base_val = if base.facets.contains(&i) { dd(0.0) } else { dot_f(h, &base.lift) };
                        let val = base_val + dot_f(h, offset);
                        if val.hi() <= 0.0 {
                            return Err(GeomError::NotInterior);
                        }
                        let s = -ddiv(val, hu);
                        if best.is_none_or(|b| s < b) {
                            best = Some(s);
                        }
                    }
                }
                best.ok_or(GeomError::CoincidentPoints)
            }
        }
    }

    /// Boundary point reached from lift `x` in direction `u`.
    pub(crate) fn hit(&self, x: &[Dd], u: &[Dd]) -> Result<(BoundaryPoint, Dd)> {
        let (sigma, facets) = self.exit(x, u)?;
        let mut lift = axpy(x, sigma, u);
        self.snap(&mut lift, &facets);
        let point = ProjPoint::from_dd(lift.clone())?;
        Ok((BoundaryPoint { point, lift, facets }, sigma))
    }

    /// Projects a lift onto the hyperplanes of the given facets, so that
    /// incidences hold to the last bit (exactly for coordinate facets).
    fn snap(&self, lift: &mut [Dd], facets: &[usize]) {
        for &i in facets {
            let h = &self.facets[i];
            let hv = dot_f(h, lift);
            // covectors are unit, and lifts stay on the chart hyperplane only
            // if the correction is tangent to it; correct along h projected
            // onto ker(functional).
            let f = self.chart.functional();
            let hf: f64 = h.iter().zip(f).map(|(a, b)| a * b).sum();
            let ff: f64 = f.iter().map(|a| a * a).sum();
            let dir: Vec<f64> = h.iter().zip(f).map(|(a, b)| a - hf / ff * b).collect();
            let hd: f64 = h.iter().zip(&dir).map(|(a, b)| a * b).sum();
            if hd.abs() < EPS_GEOM {
                continue;
            }
            let s = hv / hd;
            for (l, d) in lift.iter_mut().zip(&dir) {
                *l -= s * *d;
            }
            let single = h.iter().filter(|v| **v != 0.0).count() == 1;
            if single {
                let k = h.iter().position(|v| *v != 0.0).unwrap();
                lift[k] = dd(0.0);
            }
        }
    }

    /// Validates a boundary point and records its incident facets.
    pub fn boundary_point(&self, p: &ProjPoint) -> Result<BoundaryPoint> {
        let lift = self.normalize(p).map_err(|e| match e {
            GeomError::ChartUndefined => GeomError::NotOnBoundary,
            e => e,
        })?;
        self.boundary_from_lift(lift)
    }

    pub(crate) fn boundary_from_lift(&self, mut lift: Vec<Dd>) -> Result<BoundaryPoint> {
        let level = to_f64(self.level(&lift));
        if level.abs() > INCIDENCE_TOL {
            return Err(GeomError::NotOnBoundary);
        }
        if self.quadric.is_some() {
            // move radially onto the quadric so later incidence computations
            // see a residual at the working precision
            let d = sub(&lift, &self.reference);
            let (sigma, _) = self.exit(&self.reference, &d)?;
            let lift = axpy(&self.reference, sigma, &d);
            let point = ProjPoint::from_dd(lift.clone())?;
            return Ok(BoundaryPoint { point, lift, facets: Vec::new() });
        }
        let facets: Vec<usize> = {
            self.facets
                .iter()
                .enumerate()
                .filter(|(_, h)| to_f64(dot_f(h, &lift)).abs() <= INCIDENCE_TOL)
                .map(|(i, _)| i)
                .collect()
        };
        self.snap(&mut lift, &facets);
        let point = ProjPoint::from_dd(lift.clone())?;
        Ok(BoundaryPoint { point, lift, facets })
    }

    /// Boundary point on known facets, skipping the incidence test; keeps
    /// points within the incidence tolerance of a lower-dimensional face
    /// distinct from it.
    pub(crate) fn boundary_on_facets(&self, mut lift: Vec<Dd>, facets: Vec<usize>) -> Result<BoundaryPoint> {
        self.snap(&mut lift, &facets);
        let point = ProjPoint::from_dd(lift.clone())?;
        Ok(BoundaryPoint { point, lift, facets })
    }

    /// Boundary point with the given chart coordinates.
    pub fn boundary_at(&self, chart: &[f64]) -> Result<BoundaryPoint> {
        self.boundary_point(&self.point(chart)?)
    }

    /// The two intersections of the line through `x` and `y` with ∂Ω,
    /// ordered so that `a, x, y, b` occur in this order along the line.
    pub fn line_hits(&self, x: &ProjPoint, y: &ProjPoint) -> Result<(BoundaryPoint, BoundaryPoint)> {
        let xl = self.interior_lift(x)?;
        let yl = self.interior_lift(y)?;
        let u = sub(&yl, &xl);
        if to_f64(norm(&u)) <= EPS_GEOM * to_f64(norm(&xl)) {
            return Err(GeomError::CoincidentPoints);
        }
        let back: Vec<Dd> = u.iter().map(|v| -*v).collect();
        let (a, _) = self.hit(&xl, &back)?;
        let (b, _) = self.hit(&yl, &u)?;
        Ok((a, b))
    }

    /// Hilbert distance `½ |log [a:x:y:b]|`.
    pub fn hilbert_distance(&self, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
        let xl = self.interior_lift(x)?;
        let yl = self.interior_lift(y)?;
        Ok(self.distance_lifts(&xl, &yl))
    }

    /// Distance between interior normalized lifts. With `u = y - x`,
    /// `a = x - σ_a u` and `b = y + σ_b u`, the cross-ratio is
    /// `(1 + σ_a)(1 + σ_b) / (σ_a σ_b)`, so the distance is
    /// `½ (log1p(1/σ_a) + log1p(1/σ_b))`.
    pub(crate) fn distance_lifts(&self, x: &[Dd], y: &[Dd]) -> f64 {
        if x.iter().zip(y).all(|(a, b)| a == b) {
            return 0.0;
        }
        let u = sub(y, x);
        let back: Vec<Dd> = u.iter().map(|v| -*v).collect();
        // numerically coincident lifts are at distance 0; a lift on or
        // outside the boundary is infinitely far away
        let fail = |e: GeomError| if e == GeomError::NotInterior { f64::INFINITY } else { 0.0 };
        let sa = match self.exit(x, &back) {
            Ok((s, _)) => s,
            Err(e) => return fail(e),
        };
        let sb = match self.exit(y, &u) {
            Ok((s, _)) => s,
            Err(e) => return fail(e),
        };
        0.5 * (to_f64(recip(sa)).ln_1p() + to_f64(recip(sb)).ln_1p())
    }

    /// Supporting hyperplanes through a boundary point.
    pub fn supports_at(&self, p: &BoundaryPoint) -> Result<Vec<SupportingHyperplane>> {
        let bp = self.boundary_from_lift(p.lift.clone())?;
        match &self.quadric {
            Some(q) => {
                let g = mat_vec(q, &bp.lift);
                let mut cov = lower(&g);
                let s = cov.iter().map(|v| v * v).sum::<f64>().sqrt();
                cov.iter_mut().for_each(|v| *v /= s);
                if to_f64(dot_f(&cov, &self.reference)) < 0.0 {
                    cov.iter_mut().for_each(|v| *v = -*v);
                }
                Ok(vec![SupportingHyperplane { covector: cov }])
            }
            None => Ok(bp
                .facets
                .iter()
                .map(|&i| SupportingHyperplane { covector: self.facets[i].clone() })
                .collect()),
        }
    }

    /// Proper: a unique supporting hyperplane. Extremal: not inside any open
    /// boundary segment, which for a polytope means being a vertex.
    pub fn classify_boundary(&self, p: &BoundaryPoint) -> Result<BoundaryClassification> {
        let bp = self.boundary_from_lift(p.lift.clone())?;
        if self.quadric.is_some() {
            return Ok(BoundaryClassification { proper: true, extremal: true });
        }
        let proper = bp.facets.len() == 1;
        let extremal = self.vertices.iter().any(|v| {
            v.iter().zip(&bp.lift).all(|(a, b)| to_f64(*a - *b).abs() <= INCIDENCE_TOL)
        });
        Ok(BoundaryClassification { proper, extremal })
    }

    /// Image of the domain under a projective map, in the transported chart.
    pub fn transformed(&self, t: &ProjTransform) -> Result<ConvexDomain> {
        if t.size() != self.dim + 1 {
            return Err(GeomError::DimensionMismatch { expected: self.dim + 1, got: t.size() });
        }
        let chart = self.chart.transported(t)?;
        let move_lift = |v: &[Dd]| -> Result<Vec<Dd>> { chart.normalize(&mat_vec(t.matrix(), v)) };
        let reference = move_lift(&self.reference)?;
        let inv = t.matrix().clone().try_inverse().ok_or(GeomError::SingularMatrix)?;
        match &self.quadric {
            Some(q) => {
                let mut q2 = inv.transpose() * q * &inv;
                let val = to_f64(dot(&reference, &mat_vec(&q2, &reference)));
                if val >= 0.0 {
                    return Err(GeomError::DomainNotPreserved);
                }
                q2 /= -val;
                Ok(Self {
                    kind: self.kind,
                    dim: self.dim,
                    chart,
                    quadric: Some(q2),
                    facets: Vec::new(),
                    vertices: Vec::new(),
                    reference,
                })
            }
            None => {
                let facets = self
                    .facets
                    .iter()
                    .map(|h| {
                        let h2 = t.push_covector(h)?;
                        let s = h2.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let mut h2: Vec<f64> = h2.iter().map(|v| v / s).collect();
                        if to_f64(dot_f(&h2, &reference)) < 0.0 {
                            h2.iter_mut().for_each(|v| *v = -*v);
                        }
                        Ok(h2)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let vertices =
                    self.vertices.iter().map(|v| move_lift(v)).collect::<Result<Vec<_>>>()?;
                Ok(Self {
                    kind: self.kind,
                    dim: self.dim,
                    chart,
                    quadric: None,
                    facets,
                    vertices,
                    reference,
                })
            }
        }
    }

    /// Checks that `t` maps each of `samples` random interior points inside
    /// the domain with the given margin.
    pub fn preserved_by(&self, t: &ProjTransform, samples: usize, margin: f64, seed: u64) -> Result<bool> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let p = self.sample_interior(&mut rng, 0.8)?;
            let q = t.apply(&p)?;
            if !self.contains_with_margin(&q, margin).unwrap_or(false) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Random interior point. `spread` in (0, 1) shrinks the sample towards
    /// the reference point in the chart.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, spread: f64) -> Result<ProjPoint> {
        let n = self.dim;
        let lift = match &self.quadric {
            Some(_) => loop {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                if v.iter().map(|x| x * x).sum::<f64>() >= 1.0 {
                    continue;
                }
                // walk from the reference towards a random direction, staying
                // within `spread` of the exit distance
                let dir = self.chart.lift_direction(&v);
                if to_f64(norm(&dir)) == 0.0 {
                    continue;
                }
                let (sigma, _) = self.exit(&self.reference, &dir)?;
                let r: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                break axpy(&self.reference, sigma * (spread * r), &scale(&dir, dd(1.0 / r)));
            },
            None => {
                let w: Vec<f64> = self.vertices.iter().map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
                let total: f64 = w.iter().sum();
                let mut p = vec![dd(0.0); n + 1];
                for (v, wi) in self.vertices.iter().zip(&w) {
                    p = axpy(&p, dd(wi / total), v);
                }
                let d = sub(&p, &self.reference);
                axpy(&self.reference, dd(spread), &d)
            }
        };
        ProjPoint::from_dd(lift)
    }

    pub(crate) fn reference_lift(&self) -> &[Dd] {
        &self.reference
    }
}

/// Free-function form of [`ConvexDomain::hilbert_distance`].
pub fn hilbert_distance(domain: &ConvexDomain, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    domain.hilbert_distance(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> ConvexDomain {
        ConvexDomain::unit_ball(2).unwrap()
    }

    #[test]
    fn contains_examples() {
        let d = disk();
        assert!(d.contains(&d.point(&[0.0, 0.0]).unwrap()).unwrap());
        assert!(!d.contains(&d.point(&[1.0, 0.0]).unwrap()).unwrap());
        let s = ConvexDomain::simplex(2).unwrap();
        assert!(s.contains(&s.point(&[1.0 / 3.0, 1.0 / 3.0]).unwrap()).unwrap());
        let inf = ProjPoint::new(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.contains(&inf), Err(GeomError::ChartUndefined));
    }

    #[test]
    fn line_hits_examples() {
        let d = disk();
        let (a, b) = d.line_hits(&d.point(&[0.0, 0.0]).unwrap(), &d.point(&[0.5, 0.0]).unwrap()).unwrap();
        let ca = d.chart_coords(a.point()).unwrap();
        let cb = d.chart_coords(b.point()).unwrap();
        assert!((ca[0] + 1.0).abs() < 1e-15 && ca[1].abs() < 1e-15);
        assert!((cb[0] - 1.0).abs() < 1e-15 && cb[1].abs() < 1e-15);

        let s = ConvexDomain::simplex(2).unwrap();
        let (a, b) = s.line_hits(&s.point(&[0.25, 0.25]).unwrap(), &s.point(&[0.5, 0.25]).unwrap()).unwrap();
        let ca = s.chart_coords(a.point()).unwrap();
        let cb = s.chart_coords(b.point()).unwrap();
        assert!(ca[0].abs() < 1e-15 && (ca[1] - 0.25).abs() < 1e-15);
        assert!((cb[0] - 0.75).abs() < 1e-15 && (cb[1] - 0.25).abs() < 1e-15);
        assert_eq!(a.facets(), &[0]);
        assert_eq!(b.facets(), &[2]);
    }

    #[test]
    fn line_hits_errors() {
        let d = disk();
        let o = d.point(&[0.0, 0.0]).unwrap();
        assert_eq!(d.line_hits(&o, &o).unwrap_err(), GeomError::CoincidentPoints);
        let out = d.point(&[2.0, 0.0]).unwrap();
        assert_eq!(d.line_hits(&o, &out).unwrap_err(), GeomError::NotInterior);
    }

    #[test]
    fn distance_examples() {
        let i = ConvexDomain::unit_ball(1).unwrap();
        let d = i.hilbert_distance(&i.point(&[0.0]).unwrap(), &i.point(&[0.5]).unwrap()).unwrap();
        assert!((d - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!((d - 0.5493061443340549).abs() < 1e-12);
        let k = disk();
        let p = k.point(&[0.3, -0.1]).unwrap();
        assert_eq!(k.hilbert_distance(&p, &p).unwrap(), 0.0);
        let d2 = k.hilbert_distance(&k.point(&[0.0, 0.0]).unwrap(), &k.point(&[0.5, 0.0]).unwrap()).unwrap();
        assert!((d2 - 0.5493061443340549).abs() < 1e-12);
    }

    #[test]
    fn supports_and_classification() {
        let d = disk();
        let p = d.boundary_at(&[1.0, 0.0]).unwrap();
        let h = d.supports_at(&p).unwrap();
        assert_eq!(h.len(), 1);
        // {x = 1} is the covector (-1, 0, 1)/√2, positive at the origin
        let s2 = 0.5f64.sqrt();
        assert!((h[0].covector[0] + s2).abs() < 1e-15 && (h[0].covector[2] - s2).abs() < 1e-15);
        assert_eq!(d.classify_boundary(&p).unwrap(), BoundaryClassification { proper: true, extremal: true });

        let s = ConvexDomain::simplex(2).unwrap();
        let v = s.boundary_at(&[0.0, 0.0]).unwrap();
        let hv = s.supports_at(&v).unwrap();
        assert_eq!(hv.len(), 2);
        assert_eq!(s.classify_boundary(&v).unwrap(), BoundaryClassification { proper: false, extremal: true });
        let e = s.boundary_at(&[0.5, 0.0]).unwrap();
        let he = s.supports_at(&e).unwrap();
        assert_eq!(he, vec![SupportingHyperplane { covector: vec![0.0, 1.0, 0.0] }]);
        assert_eq!(s.classify_boundary(&e).unwrap(), BoundaryClassification { proper: true, extremal: false });
        assert_eq!(s.boundary_at(&[0.2, 0.2]).unwrap_err(), GeomError::NotOnBoundary);
    }

    #[test]
    fn polytope_validation() {
        // the unit square in the standard chart
        let hs = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![-1.0, 0.0, 1.0], vec![0.0, -1.0, 1.0]];
        let vs = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let sq = ConvexDomain::polytope(&hs, &vs).unwrap();
        assert!(sq.contains(&sq.point(&[0.5, 0.5]).unwrap()).unwrap());
        let bad = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        assert!(ConvexDomain::polytope(&hs, &bad).is_err());
    }

    #[test]
    fn domain_spec_parses_and_rejects_unknown_keys() {
        let s: DomainSpec = serde_json::from_str(r#"{"type":"ellipsoid","dim":2}"#).unwrap();
        assert_eq!(s.build().unwrap().kind(), DomainKind::Ellipsoid);
        let s: DomainSpec = serde_json::from_str(r#"{"type":"simplex","dim":2}"#).unwrap();
        assert_eq!(s.build().unwrap().dim(), 2);
        assert!(serde_json::from_str::<DomainSpec>(r#"{"type":"simplex","dim":2,"x":1}"#).is_err());
        let q: DomainSpec = serde_json::from_str(
            r#"{"type":"polytope","half_spaces":[[1,0],[0,1]],"vertices":[[1,0],[0,1]]}"#,
        )
        .unwrap();
        let quad = q.build().unwrap();
        assert_eq!(quad.dim(), 1);
    }
}
