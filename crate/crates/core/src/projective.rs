//! Homogeneous coordinates, projective transformations, affine charts and
//! the cross-ratio.
//!
//! Point coordinates are kept in double-double precision. Points deep inside
//! a Hilbert geometry sit exponentially close to the boundary, and the
//! distance to the boundary is exactly the quantity the metric measures.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::error::{GeomError, Result};
use crate::EPS_GEOM;

/// Double-double scalar used for coordinates.
pub type Dd = TwoFloat;

#[inline]
pub fn dd(x: f64) -> Dd {
    Dd::from(x)
}

/// Quotient by long division; the `Div` of `TwoFloat` is only as good as
/// an `f64` quotient.
pub(crate) fn ddiv(a: Dd, b: Dd) -> Dd {
    let q1 = a.hi() / b.hi();
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    Dd::new_add(q1, q2) + q3
}

#[inline]
pub(crate) fn recip(b: Dd) -> Dd {
    ddiv(dd(1.0), b)
}

#[inline]
pub fn to_f64(x: Dd) -> f64 {
    x.hi() + x.lo()
}

pub(crate) fn dot(a: &[Dd], b: &[Dd]) -> Dd {
    a.iter().zip(b).fold(dd(0.0), |acc, (x, y)| acc + *x * *y)
}

pub(crate) fn dot_f(a: &[f64], b: &[Dd]) -> Dd {
    a.iter().zip(b).fold(dd(0.0), |acc, (x, y)| acc + *y * *x)
}

pub(crate) fn norm(a: &[Dd]) -> Dd {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

pub(crate) fn add(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    a.iter().zip(b).map(|(x, y)| *x + *y).collect()
}

pub(crate) fn scale(a: &[Dd], s: Dd) -> Vec<Dd> {
    a.iter().map(|x| *x * s).collect()
}

/// `a + s * u`
pub(crate) fn axpy(a: &[Dd], s: Dd, u: &[Dd]) -> Vec<Dd> {
    a.iter().zip(u).map(|(x, y)| *x + s * *y).collect()
}

pub(crate) fn lift_f64(a: &[f64]) -> Vec<Dd> {
    a.iter().map(|&x| dd(x)).collect()
}

pub(crate) fn lower(a: &[Dd]) -> Vec<f64> {
    a.iter().map(|&x| to_f64(x)).collect()
}

pub(crate) fn mat_vec(m: &DMatrix<f64>, v: &[Dd]) -> Vec<Dd> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).fold(dd(0.0), |acc, j| acc + v[j] * m[(i, j)]))
        .collect()
}

/// A point of real projective space, stored in canonical form: unit
/// Euclidean norm with the first significant entry positive.
#[derive(Clone, Debug)]
pub struct ProjPoint {
    coords: Vec<Dd>,
}

impl ProjPoint {
    /// Builds a point from homogeneous coordinates.
    pub fn new(coords: &[f64]) -> Result<Self> {
        Self::from_dd(lift_f64(coords))
    }

    pub fn from_dd(coords: Vec<Dd>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(GeomError::InvalidInput(
                "homogeneous coordinates need at least two entries".into(),
            ));
        }
        if coords.iter().any(|c| !c.hi().is_finite()) {
            return Err(GeomError::InvalidInput("non-finite coordinate".into()));
        }
        let n = norm(&coords);
        if n.hi() == 0.0 {
            return Err(GeomError::InvalidInput("zero vector".into()));
        }
        let mut coords = scale(&coords, recip(n));
        if let Some(first) = coords.iter().find(|c| c.hi().abs() > EPS_GEOM) {
            if first.hi() < 0.0 {
                coords.iter_mut().for_each(|c| *c = -*c);
            }
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[Dd] {
        &self.coords
    }

    pub fn to_f64(&self) -> Vec<f64> {
        lower(&self.coords)
    }

    /// Length of the homogeneous coordinate vector (n + 1).
    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    /// Dimension n of the projective space.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Equality of canonical forms, entrywise within `tol`.
    pub fn approx_eq(&self, other: &ProjPoint, tol: f64) -> bool {
        self.coords.len() == other.coords.len()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| to_f64(*a - *b).abs() <= tol)
    }
}

impl PartialEq for ProjPoint {
    fn eq(&self, other: &Self) -> bool {
        self.approx_eq(other, EPS_GEOM)
    }
}

/// A projective transformation in canonical form: unit Frobenius norm, sign
/// fixed by the first significant entry.
#[derive(Clone, Debug)]
pub struct ProjTransform {
    matrix: DMatrix<f64>,
}

/// Relative determinant below which a matrix counts as singular.
const SINGULAR_TOL: f64 = 1e-12;

impl ProjTransform {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        canonicalize(&matrix)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 || rows.iter().any(|r| r.len() != n) {
            return Err(GeomError::InvalidInput("matrix must be square, size >= 2".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(size: usize) -> Self {
        Self::canonical_unchecked(DMatrix::identity(size, size))
    }

    /// Canonical form without the singularity test. Used for products of
    /// already validated transformations, whose normalized determinant can
    /// underflow any fixed threshold while staying invertible.
    pub(crate) fn canonical_unchecked(mut matrix: DMatrix<f64>) -> Self {
        let f = matrix.norm();
        matrix /= f;
        if let Some(first) = matrix.transpose().iter().find(|v| v.abs() > EPS_GEOM) {
            if *first < 0.0 {
                matrix.neg_mut();
            }
        }
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn compose(&self, other: &ProjTransform) -> ProjTransform {
        Self::canonical_unchecked(&self.matrix * &other.matrix)
    }

    pub fn inverse(&self) -> Result<ProjTransform> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(GeomError::SingularMatrix)?;
        Ok(Self::canonical_unchecked(inv))
    }

    /// Image of a point: canonical form of `T * coords(p)`.
    pub fn apply(&self, p: &ProjPoint) -> Result<ProjPoint> {
        if p.ambient_dim() != self.size() {
            return Err(GeomError::DimensionMismatch {
                expected: self.size(),
                got: p.ambient_dim(),
            });
        }
        ProjPoint::from_dd(mat_vec(&self.matrix, p.coords()))
    }

    /// Pulls a covector back: `h ∘ T⁻¹`, so that `h(x) = h'(T x)`.
    pub fn push_covector(&self, h: &[f64]) -> Result<Vec<f64>> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or(GeomError::SingularMatrix)?;
        let n = self.size();
        Ok((0..n).map(|j| (0..n).map(|i| h[i] * inv[(i, j)]).sum()).collect())
    }
}

/// Scale and sign normal form of an invertible matrix; `λT` maps to the same
/// output for every `λ ≠ 0`.
pub fn canonicalize(matrix: &DMatrix<f64>) -> Result<ProjTransform> {
    let n = matrix.nrows();
    if n != matrix.ncols() || n < 2 {
        return Err(GeomError::InvalidInput("matrix must be square, size >= 2".into()));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::InvalidInput("non-finite matrix entry".into()));
    }
    let f = matrix.norm();
    if f == 0.0 {
        return Err(GeomError::SingularMatrix);
    }
    let det = (matrix / f).determinant();
    if det.abs() <= SINGULAR_TOL {
        return Err(GeomError::SingularMatrix);
    }
    Ok(ProjTransform::canonical_unchecked(matrix.clone()))
}

/// Free-function form of [`ProjTransform::apply`].
pub fn apply(t: &ProjTransform, p: &ProjPoint) -> Result<ProjPoint> {
    t.apply(p)
}

/// An affine chart `{ p : functional(p) = 1 }`. Chart coordinates of a point
/// are the first n entries of its normalized lift; this needs the last entry
/// of the functional to be nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineChart {
    functional: Vec<f64>,
}

impl AffineChart {
    pub fn new(functional: Vec<f64>) -> Result<Self> {
        match functional.last() {
            Some(l) if l.abs() > EPS_GEOM && functional.len() >= 2 => Ok(Self { functional }),
            _ => Err(GeomError::InvalidInput(
                "chart functional needs a nonzero last entry".into(),
            )),
        }
    }

    /// The chart `x_n = 1`.
    pub fn standard(dim: usize) -> Self {
        let mut functional = vec![0.0; dim + 1];
        functional[dim] = 1.0;
        Self { functional }
    }

    pub fn functional(&self) -> &[f64] {
        &self.functional
    }

    pub fn dim(&self) -> usize {
        self.functional.len() - 1
    }

    pub fn eval(&self, v: &[Dd]) -> Dd {
        dot_f(&self.functional, v)
    }

    /// Lift `p / functional(p)` onto the chart hyperplane.
    pub fn normalize(&self, p: &[Dd]) -> Result<Vec<Dd>> {
        let f = self.eval(p);
        if to_f64(f).abs() <= EPS_GEOM * to_f64(norm(p)) {
            return Err(GeomError::ChartUndefined);
        }
        Ok(scale(p, recip(f)))
    }

    pub fn normalize_point(&self, p: &ProjPoint) -> Result<Vec<Dd>> {
        self.normalize(p.coords())
    }

    /// Point with the given chart coordinates.
    pub fn lift(&self, chart: &[f64]) -> Result<Vec<Dd>> {
        self.lift_dd(&lift_f64(chart))
    }

    pub fn lift_dd(&self, chart: &[Dd]) -> Result<Vec<Dd>> {
        let n = self.dim();
        if chart.len() != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: chart.len() });
        }
        let partial = dot_f(&self.functional[..n], chart);
        let last = (dd(1.0) - partial) / self.functional[n];
        let mut v = chart.to_vec();
        v.push(last);
        Ok(v)
    }

    /// Tangent vector of the chart hyperplane with the given chart components.
    pub fn lift_direction(&self, chart: &[f64]) -> Vec<Dd> {
        self.lift_direction_dd(&lift_f64(chart))
    }

    pub fn lift_direction_dd(&self, chart: &[Dd]) -> Vec<Dd> {
        let n = self.dim();
        let partial = dot_f(&self.functional[..n], chart);
        let mut v = chart.to_vec();
        v.push(-partial / self.functional[n]);
        v
    }

    pub fn point(&self, chart: &[f64]) -> Result<ProjPoint> {
        ProjPoint::from_dd(self.lift(chart)?)
    }

    pub fn coords_of(&self, p: &ProjPoint) -> Result<Vec<f64>> {
        let v = self.normalize_point(p)?;
        Ok(lower(&v[..self.dim()]))
    }

    /// Chart transported by `t`: `functional ∘ t⁻¹`.
    pub fn transported(&self, t: &ProjTransform) -> Result<Self> {
        Self::new(t.push_covector(&self.functional)?)
    }
}

/// Orthonormal basis of the span of `vs`, Gram-Schmidt in double-double.
/// Vectors whose residual falls below `tol` relative to their norm are skipped.
pub(crate) fn orthonormal_basis(vs: &[&[Dd]], tol: f64) -> Vec<Vec<Dd>> {
    let mut basis: Vec<Vec<Dd>> = Vec::new();
    for v in vs {
        let nv = to_f64(norm(v));
        let mut w = v.to_vec();
        for _ in 0..2 {
            for e in &basis {
                let c = dot(&w, e);
                w = axpy(&w, -c, e);
            }
        }
        let nw = norm(&w);
        if to_f64(nw) > tol * nv {
            basis.push(scale(&w, recip(nw)));
        }
    }
    basis
}

fn line_coords(p: &[Dd], e1: &[Dd], e2: &[Dd]) -> Result<(Dd, Dd)> {
    let c1 = dot(p, e1);
    let c2 = dot(p, e2);
    let r: Vec<Dd> = p
        .iter()
        .zip(e1.iter().zip(e2))
        .map(|(pi, (a, b))| *pi - c1 * *a - c2 * *b)
        .collect();
    if to_f64(norm(&r)) > EPS_GEOM * to_f64(norm(p)) {
        return Err(GeomError::NonCollinear);
    }
    Ok((c1, c2))
}

fn det2(p: (Dd, Dd), q: (Dd, Dd)) -> Dd {
    p.0 * q.1 - p.1 * q.0
}

/// The cross-ratio `[a:x:y:b] = |ay|·|xb| / (|ax|·|yb|)` of four collinear
/// points, computed from 2×2 determinants in an orthonormal basis of their
/// common line, so no affine chart is involved.
pub fn cross_ratio(a: &ProjPoint, x: &ProjPoint, y: &ProjPoint, b: &ProjPoint) -> Result<f64> {
    let m = a.ambient_dim();
    for p in [x, y, b] {
        if p.ambient_dim() != m {
            return Err(GeomError::DimensionMismatch { expected: m, got: p.ambient_dim() });
        }
    }
    let basis = orthonormal_basis(&[a.coords(), b.coords(), x.coords(), y.coords()], EPS_GEOM);
    match basis.len() {
        0 | 1 => return Err(GeomError::DegenerateQuadruple),
        2 => {}
        _ => return Err(GeomError::NonCollinear),
    }
    let (e1, e2) = (&basis[0], &basis[1]);
    let ca = line_coords(a.coords(), e1, e2)?;
    let cx = line_coords(x.coords(), e1, e2)?;
    let cy = line_coords(y.coords(), e1, e2)?;
    let cb = line_coords(b.coords(), e1, e2)?;
    let ax = det2(ca, cx);
    let yb = det2(cy, cb);
    if to_f64(ax).abs() <= EPS_GEOM || to_f64(yb).abs() <= EPS_GEOM {
        return Err(GeomError::DegenerateQuadruple);
    }
    Ok(to_f64(ddiv(det2(ca, cy) * det2(cx, cb), ax * yb)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64) -> ProjPoint {
        ProjPoint::new(&[x, 1.0]).unwrap()
    }

    #[test]
    fn cross_ratio_on_the_affine_line() {
        assert!((cross_ratio(&pt(-1.0), &pt(0.0), &pt(0.5), &pt(1.0)).unwrap() - 3.0).abs() < 1e-14);
        assert!((cross_ratio(&pt(-1.0), &pt(-0.5), &pt(0.5), &pt(1.0)).unwrap() - 9.0).abs() < 1e-14);
        assert!((cross_ratio(&pt(-1.0), &pt(0.3), &pt(0.3), &pt(1.0)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cross_ratio_errors() {
        let a = ProjPoint::new(&[0.0, 0.0, 1.0]).unwrap();
        let x = ProjPoint::new(&[0.5, 0.0, 1.0]).unwrap();
        let y = ProjPoint::new(&[0.5, 0.5, 1.0]).unwrap();
        let b = ProjPoint::new(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(cross_ratio(&a, &x, &y, &b), Err(GeomError::NonCollinear));
        assert_eq!(cross_ratio(&a, &a, &x, &b), Err(GeomError::DegenerateQuadruple));
        assert_eq!(cross_ratio(&a, &x, &b, &b), Err(GeomError::DegenerateQuadruple));
    }

    #[test]
    fn point_canonical_form() {
        let p = ProjPoint::new(&[-2.0, 4.0, -4.0]).unwrap();
        let q = ProjPoint::new(&[1.0, -2.0, 2.0]).unwrap();
        assert_eq!(p, q);
        assert!((to_f64(norm(p.coords())) - 1.0).abs() < 1e-15);
        assert!(p.coords()[0].hi() > 0.0);
        assert!(ProjPoint::new(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn transform_canonical_form() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let t = canonicalize(&m).unwrap();
        let t3 = canonicalize(&(&m * 3.0)).unwrap();
        let tn = canonicalize(&(-&m)).unwrap();
        assert!((t.matrix() - t3.matrix()).norm() < 1e-15);
        assert!((t.matrix() - tn.matrix()).norm() < 1e-15);
        let id = canonicalize(&DMatrix::identity(3, 3)).unwrap();
        let expect = DMatrix::<f64>::identity(3, 3) / 3f64.sqrt();
        assert!((id.matrix() - expect).norm() < 1e-15);
        let twice = canonicalize(t.matrix()).unwrap();
        assert!((twice.matrix() - t.matrix()).norm() < 1e-15);
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(canonicalize(&sing).unwrap_err(), GeomError::SingularMatrix);
    }

    #[test]
    fn apply_is_scale_invariant() {
        let p = ProjPoint::new(&[0.3, -0.2, 1.0]).unwrap();
        let id = ProjTransform::identity(3);
        assert_eq!(id.apply(&p).unwrap(), p);
        let two = ProjTransform::new(DMatrix::identity(3, 3) * 2.0).unwrap();
        assert_eq!(two.apply(&p).unwrap(), p);
    }

    #[test]
    fn chart_lift_round_trip() {
        let chart = AffineChart::new(vec![1.0, 1.0, 1.0]).unwrap();
        let v = chart.lift(&[0.25, 0.5]).unwrap();
        assert!((to_f64(v[2]) - 0.25).abs() < 1e-16);
        let p = ProjPoint::from_dd(v).unwrap();
        let c = chart.coords_of(&p).unwrap();
        assert!((c[0] - 0.25).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15);
        let at_infinity = ProjPoint::new(&[1.0, -1.0, 0.0]).unwrap();
        assert_eq!(chart.coords_of(&at_infinity), Err(GeomError::ChartUndefined));
    }
}
