//! Asymptotic geometry: asymptotic lines, Busemann functions, horospheres,
//! shadows and stable/unstable leaves.

use serde::Serialize;

use crate::domain::{BoundaryPoint, ConvexDomain};
use crate::error::{GeomError, Result};
use crate::flow::{endpoints, min_dist_to_ray, Line, UnitTangent, T_MAX};
use crate::projective::{axpy, dd, ddiv, dot, dot_f, norm, orthonormal_basis, recip, scale, sub, to_f64, Dd, ProjPoint};

/// The class of the projective ray from `basepoint` to `target`.
#[derive(Clone, Debug)]
pub struct BoundaryDirection {
    pub target: BoundaryPoint,
    pub basepoint: ProjPoint,
}

impl BoundaryDirection {
    pub fn new(target: BoundaryPoint, basepoint: ProjPoint) -> Self {
        Self { target, basepoint }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LeafRelation {
    StrongStable,
    StrongUnstable,
    WeakStable,
    WeakUnstable,
    None,
}

/// Leaf relation plus whether more than one predicate held.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LeafReport {
    pub relation: LeafRelation,
    pub overlapping: bool,
}

/// Whether lines ending at `xi` and `eta` are positively asymptotic: the
/// endpoints coincide or lie in the relative interior of one face of ∂Ω.
pub fn lines_asymptotic(domain: &ConvexDomain, xi: &BoundaryPoint, eta: &BoundaryPoint) -> Result<bool> {
    let a = domain.boundary_from_lift(xi.lift().to_vec())?;
    let b = domain.boundary_from_lift(eta.lift().to_vec())?;
    if a.approx_eq(&b, 1e-9) {
        return Ok(true);
    }
    if !domain.is_polytope() {
        return Ok(false);
    }
    // a point lies in the relative interior of the face cut out by exactly
    // its active facets
    Ok(!a.facets().is_empty() && a.facets() == b.facets())
}

pub(crate) fn require_proper_extremal(domain: &ConvexDomain, xi: &BoundaryPoint) -> Result<BoundaryPoint> {
    let bp = domain.boundary_from_lift(xi.lift().to_vec())?;
    if !domain.classify_boundary(&bp)?.is_proper_extremal() {
        return Err(GeomError::NotProperExtremal);
    }
    Ok(bp)
}

fn cross3(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    vec![a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `β_ξ(x, y)` through the incidence construction.
///
/// With `H` the support at `ξ⁺`, `ξ⁻` and `η⁻` the far ends of the lines from
/// `ξ⁺` through `x` and `y`, and `q` the point of the line `ξ⁻η⁻` on `H`, the
/// line `yq` meets `xξ⁺` in `ȳ` and `β = ½ log[ξ⁻ : x : ȳ : ξ⁺]`.
pub fn busemann(domain: &ConvexDomain, xi: &BoundaryDirection, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    busemann_at(domain, &xi.target, x, y)
}

pub fn busemann_at(domain: &ConvexDomain, xi: &BoundaryPoint, x: &ProjPoint, y: &ProjPoint) -> Result<f64> {
    let xi = require_proper_extremal(domain, xi)?;
    let xl = domain.interior_lift(x)?;
    let yl = domain.interior_lift(y)?;
    busemann_lifts(domain, &xi, &xl, &yl)
}

/// Busemann function on normalized interior lifts; `xi` must already be
/// known to be proper and extremal.
pub(crate) fn busemann_lifts(domain: &ConvexDomain, xi: &BoundaryPoint, xl: &[Dd], yl: &[Dd]) -> Result<f64> {
    if xl.iter().zip(yl).all(|(a, b)| a == b) {
        return Ok(0.0);
    }
    let p = xi.lift();
    let h = domain.supports_at(xi)?.remove(0).covector;
    let w = sub(p, xl);
    let back: Vec<Dd> = w.iter().map(|c| -*c).collect();
    let (sigma_m, _) = domain.exit(xl, &back)?;

    let basis = orthonormal_basis(&[xl, p, yl], 1e-24);
    let ybar = if basis.len() < 3 {
        yl.to_vec()
    } else {
        let xi_minus = axpy(xl, -sigma_m, &w);
        let v = sub(yl, p);
        let (sy, _) = domain.exit(yl, &v)?;
        let eta_minus = axpy(yl, sy, &v);
        let q = sub(&scale(&xi_minus, dot_f(&h, &eta_minus)), &scale(&eta_minus, dot_f(&h, &xi_minus)));
        let coords = |v: &[Dd]| -> Vec<Dd> { basis.iter().map(|e| dot(v, e)).collect() };
        let (cx, cp, cy, cq) = (coords(xl), coords(p), coords(yl), coords(&q));
        if to_f64(norm(&cq)) <= 1e-24 * to_f64(norm(&xi_minus)) {
            return Err(GeomError::IncidenceDegenerate);
        }
        let l1 = cross3(&cx, &cp);
        let l2 = cross3(&cy, &cq);
        let m = cross3(&l1, &l2);
        if to_f64(norm(&m)) <= 1e-24 * to_f64(norm(&l1)) * to_f64(norm(&l2)) {
            return Err(GeomError::IncidenceDegenerate);
        }
        let mut amb = vec![dd(0.0); xl.len()];
        for (k, e) in basis.iter().enumerate() {
            amb = axpy(&amb, m[k], e);
        }
        domain.chart().normalize(&amb).map_err(|_| GeomError::IncidenceDegenerate)?
    };
    // ȳ = x + τ w; ξ⁻ sits at τ = -σ_m and ξ⁺ at τ = 1
    let tau = ddiv(dot(&sub(&ybar, xl), &w), dot(&w, &w));
    let one_minus = dd(1.0) - tau;
    if one_minus.hi() <= 0.0 || (tau + sigma_m).hi() <= 0.0 {
        return Err(GeomError::IncidenceDegenerate);
    }
    Ok(0.5 * (to_f64(ddiv(tau, sigma_m)).ln_1p() - to_f64(one_minus).ln()))
}

/// Distance from an interior lift `y` to the point `ξ + offset`, where the
/// offset is too small for that point to be stored directly.
fn distance_to_near_boundary(domain: &ConvexDomain, yl: &[Dd], xi: &BoundaryPoint, offset: &[Dd]) -> Result<f64> {
    let u = crate::projective::add(&sub(xi.lift(), yl), offset);
    let back: Vec<Dd> = u.iter().map(|c| -*c).collect();
    let (sa, _) = domain.exit(yl, &back)?;
    let sb = domain.exit_offset(xi, offset, &u)?;
    Ok(0.5 * (to_f64(recip(sa)).ln_1p() + to_f64(recip(sb)).ln_1p()))
}

/// `d(x, z_T) - d(y, z_T)` with `z_T` at distance `T` from `x` on the ray
/// `[x, ξ)`; converges to `β_ξ(x, y)` as `T` grows.
pub fn busemann_limit_oracle(domain: &ConvexDomain, xi: &BoundaryDirection, x: &ProjPoint, y: &ProjPoint, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(GeomError::Precondition("T must be positive".into()));
    }
    let bp = domain.boundary_from_lift(xi.target.lift().to_vec())?;
    let xl = domain.interior_lift(x)?;
    let yl = domain.interior_lift(y)?;
    let w = sub(bp.lift(), &xl);
    let back: Vec<Dd> = w.iter().map(|c| -*c).collect();
    let (alpha, _) = domain.exit(&xl, &back)?;
    // z_T = ξ - s w with the forward exit parameter along w equal to 1
    let e = dd((2.0 * t).exp());
    let s = ddiv(alpha + dd(1.0), dd(1.0) + alpha * e);
    let offset = scale(&w, -s);
    let dx = distance_to_near_boundary(domain, &xl, &bp, &offset)?;
    let dy = distance_to_near_boundary(domain, &yl, &bp, &offset)?;
    Ok(dx - dy)
}

/// The point `h` on the line through `w` and `ξ⁺` with `β_ξ(x, h) = 0`,
/// found by bisection.
pub fn horosphere_point(domain: &ConvexDomain, xi: &BoundaryDirection, x: &ProjPoint, w: &ProjPoint) -> Result<ProjPoint> {
    let bp = require_proper_extremal(domain, &xi.target)?;
    let xl = domain.interior_lift(x)?;
    let wl = domain.interior_lift(w)?;
    let g0 = busemann_lifts(domain, &bp, &xl, &wl)?;
    if g0 == 0.0 {
        return Ok(w.clone());
    }
    let line = Line::to_boundary(domain, wl, &bp)?;
    let g = |t: f64| busemann_lifts(domain, &bp, &xl, &line.at(t));
    // expand geometrically away from w until the sign changes
    let sign = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut near = 0.0;
    let mut far = 1.0;
    loop {
        let v = g(sign * far)?;
        if v * sign >= 0.0 {
            break;
        }
        if far >= T_MAX {
            return Err(GeomError::NoBracket);
        }
        near = far;
        far = (2.0 * far).min(T_MAX);
    }
    let (mut lo, mut hi) = if sign > 0.0 { (near, far) } else { (-far, -near) };
    for _ in 0..200 {
        if hi - lo <= 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ProjPoint::from_dd(line.at(0.5 * (lo + hi)))
}

/// Whether the ray from `x` to `ξ` passes within distance `r` of `y`.
pub fn shadow_contains(domain: &ConvexDomain, x: &ProjPoint, y: &ProjPoint, r: f64, xi: &BoundaryPoint) -> Result<bool> {
    if r <= 0.0 {
        return Err(GeomError::Precondition("r must be positive".into()));
    }
    Ok(min_dist_to_ray(domain, x, xi, y)? < r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShadowBound {
    pub beta: f64,
    pub d: f64,
    pub ok: bool,
}

/// Checks `d(x,y) - 2r ≤ β_ξ(x,y) ≤ d(x,y)` for `ξ` in the shadow of the
/// ball `B(y, r)` seen from `x`.
pub fn shadow_busemann_bound_check(domain: &ConvexDomain, x: &ProjPoint, y: &ProjPoint, r: f64, xi: &BoundaryPoint) -> Result<ShadowBound> {
    if !shadow_contains(domain, x, y, r, xi)? {
        return Err(GeomError::Precondition("ξ is not in the shadow".into()));
    }
    let beta = busemann_at(domain, xi, x, y)?;
    let d = domain.hilbert_distance(x, y)?;
    let ok = d - 2.0 * r - 1e-8 <= beta && beta <= d + 1e-8;
    Ok(ShadowBound { beta, d, ok })
}

/// Strong/weak stable and unstable relation between two flow states.
/// Priority when several hold: strong stable, strong unstable, weak stable,
/// weak unstable.
pub fn leaf_relation(domain: &ConvexDomain, v: &UnitTangent, w: &UnitTangent) -> Result<LeafReport> {
    let (vm, vp) = endpoints(domain, v)?;
    let (wm, wp) = endpoints(domain, w)?;
    for p in [&vm, &vp, &wm, &wp] {
        if !domain.classify_boundary(p)?.is_proper_extremal() {
            return Err(GeomError::NotProperExtremal);
        }
    }
    let xl = domain.interior_lift(v.foot())?;
    let yl = domain.interior_lift(w.foot())?;
    let stable = vp.approx_eq(&wp, 1e-9);
    let unstable = vm.approx_eq(&wm, 1e-9);
    let strong_stable = stable && busemann_lifts(domain, &vp, &xl, &yl)?.abs() <= 1e-7;
    let strong_unstable = unstable && busemann_lifts(domain, &vm, &xl, &yl)?.abs() <= 1e-7;
    let held = [strong_stable, strong_unstable, stable, unstable];
    let relation = if strong_stable {
        LeafRelation::StrongStable
    } else if strong_unstable {
        LeafRelation::StrongUnstable
    } else if stable {
        LeafRelation::WeakStable
    } else if unstable {
        LeafRelation::WeakUnstable
    } else {
        LeafRelation::None
    };
    // a strong relation implies the weak one; count only independent facts
    let independent = held[0] as u8 + held[1] as u8 + (stable && !strong_stable) as u8 + (unstable && !strong_unstable) as u8;
    Ok(LeafReport { relation, overlapping: independent > 1 })
}
