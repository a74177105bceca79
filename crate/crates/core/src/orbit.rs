//! Discrete matrix groups acting on a domain: orbit balls, orbit counting,
//! Poincaré series and critical exponents, element classification.

use std::collections::HashMap;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BoundaryPoint, ConvexDomain};
use crate::error::{GeomError, Result};
use crate::projective::{ProjPoint, ProjTransform};

/// Quantization step of the deduplication key.
pub const DEDUP_STEP: f64 = 1e-8;
/// Default cap on the number of enumerated elements.
pub const DEFAULT_MAX_ENTRIES: usize = 5_000_000;

/// Generators of a group, closed under inverses, without duplicates.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    label: String,
    generators: Vec<ProjTransform>,
}

/// JSON form: `{"label": ..., "generators": [[[row], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub label: String,
    pub generators: Vec<Vec<Vec<f64>>>,
}

impl GroupSpec {
    pub fn build(&self) -> Result<GroupPresentation> {
        let gens = self
            .generators
            .iter()
            .map(|g| ProjTransform::from_rows(g))
            .collect::<Result<Vec<_>>>()?;
        GroupPresentation::new(&self.label, gens)
    }
}

/// Quantization of the scalar invariant used to split dedup buckets.
const AUX_STEP: f64 = 1e-5;

fn coarse_key(m: &DMatrix<f64>) -> Vec<i64> {
    // buckets of 100 quantization steps; equality is then decided entrywise
    m.iter().map(|v| (v / (100.0 * DEDUP_STEP)).round() as i64).collect()
}

/// Set of canonical matrices up to the dedup tolerance.
#[derive(Default)]
struct DedupIndex {
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    items: Vec<DMatrix<f64>>,
}

impl DedupIndex {
    fn same(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() <= DEDUP_STEP)
    }

    /// Inserts `m` unless an equal element is present; returns whether it
    /// was new. Matrices that agree entrywise are passed to `confirm`, which
    /// separates distinct elements whose canonical forms are numerically
    /// indistinguishable (large powers of one diagonal matrix, say).
    fn insert<F: Fn(&DMatrix<f64>, &DMatrix<f64>) -> bool>(&mut self, m: &DMatrix<f64>, aux: Option<f64>, confirm: F) -> bool {
        // the optional scalar invariant splits buckets of matrices whose
        // entries are all below the quantization step
        let aux_scaled = aux.map(|a| a / AUX_STEP);
        let mut key = coarse_key(m);
        key.push(aux_scaled.map_or(0, |a| a.round() as i64));
        // neighbouring buckets catch values that straddle a bucket edge
        let mut probe = key.clone();
        let scaled = m.iter().map(|v| v / (100.0 * DEDUP_STEP)).chain(aux_scaled);
        for (i, v) in scaled.enumerate() {
            let frac = v - v.round();
            if frac.abs() > 0.49 {
                probe[i] += if frac > 0.0 { 1 } else { -1 };
                if self.lookup(&probe, m, &confirm) {
                    return false;
                }
                probe[i] = key[i];
            }
        }
        if self.lookup(&key, m, &confirm) {
            return false;
        }
        self.buckets.entry(key).or_default().push(self.items.len());
        self.items.push(m.clone());
        true
    }

    fn lookup<F: Fn(&DMatrix<f64>, &DMatrix<f64>) -> bool>(&self, key: &[i64], m: &DMatrix<f64>, confirm: &F) -> bool {
        self.buckets.get(key).is_some_and(|ids| {
            ids.iter().any(|&i| Self::same(&self.items[i], m) && confirm(&self.items[i], m))
        })
    }
}

impl GroupPresentation {
    /// Adds inverses and removes duplicate generators.
    pub fn new(label: &str, generators: Vec<ProjTransform>) -> Result<Self> {
        let size = generators.first().map(|g| g.size()).unwrap_or(0);
        let mut index = DedupIndex::default();
        let mut out = Vec::new();
        for g in &generators {
            if g.size() != size {
                return Err(GeomError::DimensionMismatch { expected: size, got: g.size() });
            }
            for h in [g.clone(), g.inverse()?] {
                if index.insert(h.matrix(), None, |_, _| true) {
                    out.push(h);
                }
            }
        }
        // the identity is not a useful generator
        if size > 0 {
            let id = ProjTransform::identity(size);
            out.retain(|g| !DedupIndex::same(g.matrix(), id.matrix()));
        }
        Ok(Self { label: label.to_string(), generators: out })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn generators(&self) -> &[ProjTransform] {
        &self.generators
    }

    /// Same group with generators in another order.
    pub fn reordered(&self, order: &[usize]) -> Self {
        Self { label: self.label.clone(), generators: order.iter().map(|&i| self.generators[i].clone()).collect() }
    }

    /// Checks each generator against `samples` random interior points.
    pub fn validate(&self, domain: &ConvexDomain, samples: usize, seed: u64) -> Result<()> {
        for g in &self.generators {
            if g.size() != domain.dim() + 1 {
                return Err(GeomError::DimensionMismatch { expected: domain.dim() + 1, got: g.size() });
            }
            if !domain.preserved_by(g, samples, 1e-9, seed)? {
                return Err(GeomError::DomainNotPreserved);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OrbitEntry {
    pub element: ProjTransform,
    pub point: ProjPoint,
    pub dist: f64,
    pub word_length: usize,
}

/// The enumerated orbit of `basepoint`, with distances measured from
/// `viewpoint`.
#[derive(Clone, Debug)]
pub struct OrbitBall {
    pub domain: ConvexDomain,
    pub viewpoint: ProjPoint,
    pub basepoint: ProjPoint,
    pub entries: Vec<OrbitEntry>,
    /// Every element with `d(x, γo) ≤ radius_complete` is present.
    pub radius_complete: f64,
    pub max_word: usize,
    /// Entry distances sorted increasingly.
    sorted: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct EnumerateOptions {
    pub max_entries: usize,
    pub validation_samples: usize,
    pub seed: u64,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self { max_entries: DEFAULT_MAX_ENTRIES, validation_samples: 32, seed: 0x5eed }
    }
}

/// Group elements of word length at most `max_word`, each with its word
/// length, in breadth-first order. The flag reports that the group closed up
/// before `max_word` (the list is the whole group).
pub(crate) fn bfs_elements<F, A>(
    group: &GroupPresentation,
    size: usize,
    max_word: usize,
    max_entries: usize,
    confirm: F,
    aux: A,
) -> Result<(Vec<(ProjTransform, usize)>, bool)>
where
    F: Fn(&DMatrix<f64>, &DMatrix<f64>) -> bool,
    A: Fn(&DMatrix<f64>) -> Option<f64> + Sync,
{
    let id = ProjTransform::identity(size);
    let mut index = DedupIndex::default();
    index.insert(id.matrix(), aux(id.matrix()), &confirm);
    let mut elements: Vec<(ProjTransform, usize)> = vec![(id.clone(), 0)];
    let mut frontier: Vec<ProjTransform> = vec![id];
    for level in 1..=max_word {
        let candidates: Vec<(ProjTransform, Option<f64>)> = frontier
            .par_iter()
            .flat_map_iter(|g| group.generators.iter().map(move |s| g.compose(s)))
            .map(|c| {
                let a = aux(c.matrix());
                (c, a)
            })
            .collect();
        let mut next = Vec::new();
        for (c, a) in candidates {
            if index.insert(c.matrix(), a, &confirm) {
                next.push(c);
            }
        }
        if elements.len() + next.len() > max_entries {
            return Err(GeomError::FrontierOverflow(max_entries));
        }
        if next.is_empty() {
            return Ok((elements, true));
        }
        elements.extend(next.iter().map(|g| (g.clone(), level)));
        frontier = next;
    }
    Ok((elements, false))
}

/// Breadth-first enumeration of words of length at most `max_word`.
pub fn enumerate_orbit(
    domain: &ConvexDomain,
    group: &GroupPresentation,
    x: &ProjPoint,
    o: &ProjPoint,
    max_word: usize,
) -> Result<OrbitBall> {
    enumerate_orbit_with(domain, group, x, o, max_word, &EnumerateOptions::default())
}

pub fn enumerate_orbit_with(
    domain: &ConvexDomain,
    group: &GroupPresentation,
    x: &ProjPoint,
    o: &ProjPoint,
    max_word: usize,
    opts: &EnumerateOptions,
) -> Result<OrbitBall> {
    domain.interior_lift(x)?;
    domain.interior_lift(o)?;
    group.validate(domain, opts.validation_samples, opts.seed)?;
    let o_coords = o.coords().to_vec();
    let same_image = |a: &DMatrix<f64>, b: &DMatrix<f64>| {
        let pa = domain.normalize(&ProjPoint::from_dd(crate::projective::mat_vec(a, &o_coords)).unwrap());
        let pb = domain.normalize(&ProjPoint::from_dd(crate::projective::mat_vec(b, &o_coords)).unwrap());
        match (pa, pb) {
            (Ok(pa), Ok(pb)) => domain.distance_lifts(&pa, &pb) <= 1e-6,
            _ => true,
        }
    };
    // d(o, γo) separates elements whose canonical entries all round to zero
    let ol = domain.interior_lift(o)?;
    let reach = |a: &DMatrix<f64>| {
        let p = ProjPoint::from_dd(crate::projective::mat_vec(a, &o_coords)).ok()?;
        let pl = domain.normalize(&p).ok()?;
        Some(domain.distance_lifts(&ol, &pl)).filter(|d| d.is_finite())
    };
    let (elements, exhausted) = bfs_elements(group, domain.dim() + 1, max_word, opts.max_entries, same_image, reach)?;
    let xl = domain.interior_lift(x)?;
    let entries: Vec<OrbitEntry> = elements
        .into_par_iter()
        .map(|(g, word_length)| {
            let image = crate::projective::mat_vec(g.matrix(), &o_coords);
            let point = ProjPoint::from_dd(image)?;
            let pl = domain.interior_lift(&point)?;
            let dist = domain.distance_lifts(&xl, &pl);
            Ok(OrbitEntry { element: g, point, dist, word_length })
        })
        .collect::<Result<Vec<_>>>()?;
    let d_xo = domain.hilbert_distance(x, o)?;
    let radius_complete = if exhausted {
        f64::INFINITY
    } else {
        let m = entries
            .iter()
            .filter(|e| e.word_length == max_word)
            .map(|e| e.dist)
            .fold(f64::INFINITY, f64::min);
        (m - d_xo).max(0.0)
    };
    let mut sorted: Vec<f64> = entries.iter().map(|e| e.dist).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(OrbitBall {
        domain: domain.clone(),
        viewpoint: x.clone(),
        basepoint: o.clone(),
        entries,
        radius_complete,
        max_word,
        sorted,
    })
}

impl OrbitBall {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries with `dist ≤ t`, without the completeness check.
    pub fn count_within(&self, t: f64) -> usize {
        self.sorted.partition_point(|d| *d <= t)
    }

    /// Distances from another interior point `y` to the orbit points.
    pub fn distances_from(&self, y: &ProjPoint) -> Result<Vec<f64>> {
        let yl = self.domain.interior_lift(y)?;
        self.entries
            .par_iter()
            .map(|e| {
                let pl = self.domain.interior_lift(&e.point)?;
                Ok(self.domain.distance_lifts(&yl, &pl))
            })
            .collect()
    }

    /// Distances from `y`, reusing the stored ones when `y` is the viewpoint.
    pub fn distances_for(&self, y: &ProjPoint) -> Result<Vec<f64>> {
        if y.approx_eq(&self.viewpoint, 1e-15) {
            Ok(self.entries.iter().map(|e| e.dist).collect())
        } else {
            self.distances_from(y)
        }
    }
}

/// `N(t) = #{γ : d(x, γo) ≤ t}`.
pub fn orbit_count(ball: &OrbitBall, t: f64) -> Result<usize> {
    if t > ball.radius_complete {
        return Err(GeomError::IncompleteRadius { requested: t, complete: ball.radius_complete });
    }
    Ok(ball.count_within(t))
}

/// Partial Poincaré series `Σ e^{-s d(x, γo)}` over the ball.
pub fn poincare_partial(ball: &OrbitBall, x: &ProjPoint, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(GeomError::Precondition("s must be nonnegative".into()));
    }
    let d = ball.distances_for(x)?;
    Ok(pairwise_sum(&d.iter().map(|d| (-s * d).exp()).collect::<Vec<_>>()))
}

/// Pairwise summation, deterministic for a given input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentEstimate {
    pub delta_hat: f64,
    pub window: (f64, f64),
    pub fit_residual: f64,
    pub counts: Vec<(f64, usize)>,
}

/// Number of sample abscissae used on narrow windows.
const MIN_SAMPLES: usize = 16;

/// Least-squares slope of `log N(t)` against `t` on the window.
///
/// Samples are taken at unit steps, refined so that every window gets at
/// least 16 abscissae.
pub fn estimate_critical_exponent(ball: &OrbitBall, window: (f64, f64)) -> Result<ExponentEstimate> {
    let (lo, hi) = window;
    if !(hi > lo) || lo < 0.0 {
        return Err(GeomError::DegenerateWindow(format!("window ({lo}, {hi})")));
    }
    if hi > ball.radius_complete {
        return Err(GeomError::IncompleteRadius { requested: hi, complete: ball.radius_complete });
    }
    let mut steps = (hi - lo).floor() as usize;
    if steps + 1 < MIN_SAMPLES {
        steps = MIN_SAMPLES - 1;
    }
    let h = (hi - lo) / steps as f64;
    let counts: Vec<(f64, usize)> = (0..=steps)
        .map(|i| {
            let t = if i == steps { hi } else { lo + h * i as f64 };
            (t, ball.count_within(t))
        })
        .collect();
    if counts.iter().any(|(_, n)| *n == 0) {
        return Err(GeomError::DegenerateWindow("N(t) vanishes in the window".into()));
    }
    if counts.windows(2).any(|w| w[1].1 < w[0].1) {
        return Err(GeomError::DegenerateWindow("N(t) decreases".into()));
    }
    let pts: Vec<(f64, f64)> = counts.iter().map(|(t, n)| (*t, (*n as f64).ln())).collect();
    let (slope, intercept) = linear_fit(&pts);
    let rms = (pts.iter().map(|(t, y)| (y - slope * t - intercept).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    Ok(ExponentEstimate { delta_hat: slope.max(0.0), window, fit_residual: rms, counts })
}

/// Ordinary least squares `y ≈ slope·t + intercept`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mt)
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceReport {
    pub s: f64,
    /// `(word length, partial sum over words up to that length)`
    pub partial_sums: Vec<(usize, f64)>,
    pub growth_ratio: Option<f64>,
    pub verdict: String,
}

pub const VERDICT_DIVERGENT: &str = "consistent with divergence";
pub const VERDICT_FLAT: &str = "flattening";
pub const VERDICT_INCONCLUSIVE: &str = "inconclusive";

/// Partial sums of `P(x, o, s)` by word length; divergence is signalled when
/// the sum still grows by more than 5% over the last quarter of lengths.
pub fn divergence_diagnostic(ball: &OrbitBall, x: &ProjPoint, delta_hat: f64) -> Result<DivergenceReport> {
    let d = ball.distances_for(x)?;
    let maxw = ball.entries.iter().map(|e| e.word_length).max().unwrap_or(0);
    let mut by_len = vec![Vec::new(); maxw + 1];
    for (e, d) in ball.entries.iter().zip(&d) {
        by_len[e.word_length].push((-delta_hat * d).exp());
    }
    let mut acc = 0.0;
    let partial_sums: Vec<(usize, f64)> = by_len
        .iter()
        .enumerate()
        .map(|(k, terms)| {
            acc += pairwise_sum(terms);
            (k, acc)
        })
        .collect();
    if maxw < 4 {
        return Ok(DivergenceReport { s: delta_hat, partial_sums, growth_ratio: None, verdict: VERDICT_INCONCLUSIVE.into() });
    }
    let q = (3 * maxw) / 4;
    let ratio = partial_sums[maxw].1 / partial_sums[q].1;
    let verdict = if ratio > 1.05 { VERDICT_DIVERGENT } else { VERDICT_FLAT };
    Ok(DivergenceReport { s: delta_hat, partial_sums, growth_ratio: Some(ratio), verdict: verdict.into() })
}

#[derive(Clone, Debug)]
pub enum ElementClass {
    Hyperbolic { attracting: BoundaryPoint, repelling: BoundaryPoint },
    FlatType { fixed: Vec<BoundaryPoint> },
    Other,
}

impl ElementClass {
    pub fn name(&self) -> &'static str {
        match self {
            ElementClass::Hyperbolic { .. } => "hyperbolic",
            ElementClass::FlatType { .. } => "flat",
            ElementClass::Other => "other",
        }
    }
}

/// Relative modulus gap below which two eigenvalues count as tied.
pub const PROXIMAL_GAP: f64 = 1e-6;

/// Real eigenvalues with one-dimensional eigenspaces, with eigenvectors,
/// plus the sorted moduli of all eigenvalues.
pub(crate) fn simple_real_eigen(m: &DMatrix<f64>) -> (Vec<(f64, Vec<f64>)>, Vec<Complex<f64>>) {
    let n = m.nrows();
    let mut eig: Vec<Complex<f64>> = m.clone().complex_eigenvalues().iter().cloned().collect();
    eig.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    let scale = m.norm();
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for l in &eig {
        if l.im.abs() > 1e-9 * scale {
            continue;
        }
        let lr = l.re;
        if out.iter().any(|(v, _)| (v - lr).abs() <= 1e-9 * scale) {
            continue;
        }
        let shifted = m - DMatrix::identity(n, n) * lr;
        let svd = shifted.svd(false, true);
        let vt = match svd.v_t {
            Some(v) => v,
            None => continue,
        };
        let mut sv: Vec<(f64, usize)> = svd.singular_values.iter().cloned().zip(0..).collect();
        sv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // a one-dimensional kernel: one tiny singular value, the next clearly not
        if sv[0].0 > 1e-7 * scale || (n > 1 && sv[1].0 <= 1e-7 * scale) {
            continue;
        }
        let row = vt.row(sv[0].1);
        out.push((lr, row.iter().cloned().collect()));
    }
    (out, eig)
}

/// Attracting and repelling eigenlines of a biproximal matrix.
pub(crate) fn biproximal_lines(m: &DMatrix<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    let (simple, eig) = simple_real_eigen(m);
    let n = eig.len();
    if n < 2 {
        return None;
    }
    let top = eig[0].norm();
    let bottom = eig[n - 1].norm();
    if (top - eig[1].norm()) <= PROXIMAL_GAP * top || (eig[n - 2].norm() - bottom) <= PROXIMAL_GAP * eig[n - 2].norm() {
        return None;
    }
    let find = |target: Complex<f64>| {
        simple
            .iter()
            .find(|(l, _)| (l - target.re).abs() <= 1e-9 * top && target.im.abs() <= 1e-9 * top)
            .map(|(_, v)| v.clone())
    };
    Some((find(eig[0])?, find(eig[n - 1])?))
}

/// Hyperbolic, flat-type or other, from the eigenstructure of `t`.
pub fn classify_element(domain: &ConvexDomain, t: &ProjTransform) -> Result<ElementClass> {
    if t.size() != domain.dim() + 1 {
        return Err(GeomError::DimensionMismatch { expected: domain.dim() + 1, got: t.size() });
    }
    if !domain.preserved_by(t, 32, 1e-9, 0x5eed)? {
        return Err(GeomError::DomainNotPreserved);
    }
    let on_boundary = |v: &[f64]| -> Option<BoundaryPoint> {
        let p = ProjPoint::new(v).ok()?;
        domain.boundary_point(&p).ok()
    };
    if let Some((att, rep)) = biproximal_lines(t.matrix()) {
        if let (Some(a), Some(r)) = (on_boundary(&att), on_boundary(&rep)) {
            let ca = domain.classify_boundary(&a)?;
            let cr = domain.classify_boundary(&r)?;
            if ca.is_proper_extremal() && cr.is_proper_extremal() {
                return Ok(ElementClass::Hyperbolic { attracting: a, repelling: r });
            }
        }
    }
    let (simple, _) = simple_real_eigen(t.matrix());
    let fixed: Vec<BoundaryPoint> = simple.iter().filter_map(|(_, v)| on_boundary(v)).collect();
    let mut flat = false;
    for p in &fixed {
        if !domain.classify_boundary(p)?.is_proper_extremal() {
            flat = true;
        }
    }
    if flat {
        Ok(ElementClass::FlatType { fixed })
    } else {
        Ok(ElementClass::Other)
    }
}

/// Convenience: the translation `diag(λ_0, …, λ_n)`.
pub fn diagonal(entries: &[f64]) -> Result<ProjTransform> {
    ProjTransform::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
}
