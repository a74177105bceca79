//! Birkhoff averages along the geodesic flow, dispersion of those averages
//! across random starts, and sphere growth against the critical exponent.
//!
//! The quotient `Ω/Γ` is simulated by folding: after every step the tangent
//! is moved by the group element bringing its foot closest to the basepoint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::require_proper_extremal;
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::flow::{endpoints, flow, UnitTangent};
use crate::measures::sphere_net_count;
use crate::orbit::{estimate_critical_exponent, linear_fit, OrbitBall};
use crate::projective::{Dd, ProjPoint, ProjTransform};

/// A function on unit tangents, constant along fibres.
#[derive(Clone, Copy, Debug)]
pub enum ObservableSpec<'a> {
    Constant(f64),
    /// `exp(-scale · min_γ d(πw, γp))` over the enumerated ball.
    OrbitProximity { point: &'a ProjPoint, scale: f64, ball: &'a OrbitBall },
}

impl ObservableSpec<'_> {
    /// Supremum of the observable.
    pub fn sup(&self) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::OrbitProximity { .. } => 1.0,
        }
    }
}

/// Group elements near the basepoint, for folding tangents back.
struct Folder {
    center: Vec<Dd>,
    /// `(d(o, γo), γo, γ⁻¹)` sorted by distance.
    moves: Vec<(f64, Vec<Dd>, ProjTransform)>,
}

impl Folder {
    fn new(domain: &ConvexDomain, ball: &OrbitBall) -> Result<Self> {
        let center = domain.interior_lift(&ball.basepoint)?;
        let mut moves = ball
            .entries
            .par_iter()
            .map(|e| {
                let pl = domain.interior_lift(&e.point)?;
                Ok((domain.distance_lifts(&center, &pl), pl, e.element.inverse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        moves.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { center, moves })
    }

    /// Moves `v` into the Dirichlet region of the basepoint.
    fn fold(&self, domain: &ConvexDomain, v: UnitTangent) -> Result<(UnitTangent, bool)> {
        let y = domain.interior_lift(v.foot())?;
        let dy = domain.distance_lifts(&self.center, &y);
        let mut best: Option<(f64, &ProjTransform)> = None;
        for (d0, pl, inv) in &self.moves {
            // d(y, γo) < d(y, o) forces d(o, γo) < 2 d(y, o)
            if *d0 >= 2.0 * dy {
                break;
            }
            let d = domain.distance_lifts(&y, pl);
            if d < best.map_or(dy, |b| b.0) {
                best = Some((d, inv));
            }
        }
        match best {
            Some((_, inv)) => Ok((v.transformed(domain, domain, inv)?, true)),
            None => Ok((v, false)),
        }
    }
}

/// Observable with its orbit points precomputed.
enum Prepared {
    Constant(f64),
    Proximity { center: Vec<Dd>, scale: f64, targets: Vec<(f64, Vec<Dd>)> },
}

impl Prepared {
    fn new(domain: &ConvexDomain, f: &ObservableSpec) -> Result<Self> {
        match *f {
            ObservableSpec::Constant(c) => Ok(Self::Constant(c)),
            ObservableSpec::OrbitProximity { point, scale, ball } => {
                if !(scale > 0.0) {
                    return Err(GeomError::Precondition("scale must be positive".into()));
                }
                let center = domain.interior_lift(&ball.basepoint)?;
                let mut targets = ball
                    .entries
                    .par_iter()
                    .map(|e| {
                        let pl = domain.interior_lift(&e.element.apply(point)?)?;
                        Ok((domain.distance_lifts(&center, &pl), pl))
                    })
                    .collect::<Result<Vec<_>>>()?;
                targets.sort_by(|a, b| a.0.total_cmp(&b.0));
                Ok(Self::Proximity { center, scale, targets })
            }
        }
    }

    fn eval(&self, domain: &ConvexDomain, v: &UnitTangent) -> Result<f64> {
        match self {
            Self::Constant(c) => Ok(*c),
            Self::Proximity { center, scale, targets } => {
                let y = domain.interior_lift(v.foot())?;
                let dy = domain.distance_lifts(center, &y);
                let mut best = f64::INFINITY;
                for (d0, pl) in targets {
                    if d0 - dy >= best {
                        break;
                    }
                    best = best.min(domain.distance_lifts(&y, pl));
                }
                Ok((-scale * best).exp())
            }
        }
    }
}

/// Result of one Birkhoff integration.
#[derive(Clone, Debug)]
pub struct BirkhoffRun {
    pub average: f64,
    /// Final state, folded; continuing from it extends the trajectory. Not
    /// tracked for constant observables.
    pub end: Option<UnitTangent>,
    pub steps: usize,
    pub folds: usize,
}

fn check_regular(domain: &ConvexDomain, v: &UnitTangent) -> Result<()> {
    let (minus, plus) = endpoints(domain, v)?;
    require_proper_extremal(domain, &minus)?;
    require_proper_extremal(domain, &plus)?;
    Ok(())
}

fn check_times(t: f64, dt: f64) -> Result<usize> {
    if !(t > 0.0) || !(dt > 0.0 && dt <= 0.1) {
        return Err(GeomError::Precondition("need T > 0 and 0 < dt <= 0.1".into()));
    }
    Ok((t / dt - 1e-9).ceil().max(1.0) as usize)
}

/// Trapezoidal running averages at the step counts in `marks` (increasing).
fn integrate(
    domain: &ConvexDomain,
    v: &UnitTangent,
    f: &Prepared,
    folder: Option<&Folder>,
    h: f64,
    marks: &[usize],
) -> Result<(Vec<f64>, UnitTangent, usize)> {
    let last = *marks.last().expect("at least one mark");
    let mut state = v.clone();
    let f0 = f.eval(domain, &state)?;
    let mut sum = 0.5 * f0;
    let mut folds = 0;
    let mut out = Vec::with_capacity(marks.len());
    let mut next = marks.iter().peekable();
    for k in 1..=last {
        state = flow(domain, &state, h)?;
        if let Some(folder) = folder {
            let (s, moved) = folder.fold(domain, state)?;
            state = s;
            folds += moved as usize;
        }
        let fk = f.eval(domain, &state)?;
        while next.peek() == Some(&&k) {
            out.push((sum + 0.5 * fk) / k as f64);
            next.next();
        }
        sum += fk;
    }
    Ok((out, state, folds))
}

/// `(1/T) ∫₀ᵀ f(φˢv) ds` by the trapezoid rule with step at most `dt`.
pub fn birkhoff_average(domain: &ConvexDomain, v: &UnitTangent, f: &ObservableSpec, t: f64, dt: f64) -> Result<f64> {
    Ok(birkhoff_run(domain, v, f, t, dt)?.average)
}

/// [`birkhoff_average`] with the final state. Proximity observables fold the
/// trajectory with their own ball.
pub fn birkhoff_run(domain: &ConvexDomain, v: &UnitTangent, f: &ObservableSpec, t: f64, dt: f64) -> Result<BirkhoffRun> {
    let n = check_times(t, dt)?;
    check_regular(domain, v)?;
    if let ObservableSpec::Constant(c) = f {
        return Ok(BirkhoffRun { average: *c, end: None, steps: n, folds: 0 });
    }
    let prepared = Prepared::new(domain, f)?;
    let folder = match f {
        ObservableSpec::OrbitProximity { ball, .. } => Some(Folder::new(domain, ball)?),
        ObservableSpec::Constant(_) => None,
    };
    let (avg, end, folds) = integrate(domain, v, &prepared, folder.as_ref(), t / n as f64, &[n])?;
    Ok(BirkhoffRun { average: avg[0], end: Some(end), steps: n, folds })
}

pub const VERDICT_ERGODIC: &str = "consistent with ergodicity";
pub const VERDICT_NOT_ERGODIC: &str = "dispersion not decreasing";

#[derive(Clone, Debug, Serialize)]
pub struct DispersionReport {
    pub ladder: Vec<f64>,
    /// Standard deviation of the averages across starts, per `T`.
    pub deviations: Vec<f64>,
    pub means: Vec<f64>,
    /// `averages[start][k]` is the average up to `ladder[k]`.
    pub averages: Vec<Vec<f64>>,
    /// Candidate starts rejected as irregular.
    pub rejected: usize,
    pub consistent: bool,
    pub verdict: String,
}

fn deviation(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.iter().all(|x| *x == xs[0]) {
        return (xs[0], 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn random_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return v;
        }
    }
}

/// Birkhoff averages of `f` from `starts` random regular tangents with feet
/// folded near the basepoint of `group`, compared along the `T` ladder.
pub fn ergodicity_dispersion(
    domain: &ConvexDomain,
    group: &OrbitBall,
    f: &ObservableSpec,
    starts: usize,
    ladder: &[f64],
    seed: u64,
) -> Result<DispersionReport> {
    if starts < 10 {
        return Err(GeomError::DegenerateSample);
    }
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GeomError::Precondition("ladder must be increasing".into()));
    }
    let dt = 0.1;
    let marks: Vec<usize> = ladder.iter().map(|t| check_times(*t, dt)).collect::<Result<_>>()?;
    let folder = Folder::new(domain, group)?;
    let prepared = Prepared::new(domain, f)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tangents = Vec::with_capacity(starts);
    let mut rejected = 0;
    while tangents.len() < starts {
        if rejected > 100 * starts {
            return Err(GeomError::DegenerateSample);
        }
        let foot = domain.sample_interior(&mut rng, 0.9)?;
        let dir = random_direction(&mut rng, domain.dim());
        let v = UnitTangent::new(foot, &dir)?;
        let (v, _) = folder.fold(domain, v)?;
        match check_regular(domain, &v) {
            Ok(()) => tangents.push(v),
            Err(GeomError::NotProperExtremal) => rejected += 1,
            Err(e) => return Err(e),
        }
    }

    let averages: Vec<Vec<f64>> = match prepared {
        Prepared::Constant(c) => vec![vec![c; ladder.len()]; starts],
        _ => tangents
            .par_iter()
            .map(|v| {
                // one trajectory per start; the step divides every ladder time
                let h = ladder[0] / marks[0] as f64;
                let marks: Vec<usize> = ladder.iter().map(|t| (t / h).round() as usize).collect();
                Ok(integrate(domain, v, &prepared, Some(&folder), h, &marks)?.0)
            })
            .collect::<Result<_>>()?,
    };
    let (means, deviations): (Vec<f64>, Vec<f64>) = (0..ladder.len())
        .map(|k| deviation(&averages.iter().map(|a| a[k]).collect::<Vec<_>>()))
        .unzip();
    let consistent = deviations.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    Ok(DispersionReport {
        ladder: ladder.to_vec(),
        deviations,
        means,
        averages,
        rejected,
        consistent,
        verdict: if consistent { VERDICT_ERGODIC } else { VERDICT_NOT_ERGODIC }.to_string(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    /// `(t, sphere net count)`.
    pub rows: Vec<(f64, usize)>,
    pub slope: f64,
    pub delta_hat: f64,
    /// `|slope - δ̂| / δ̂`.
    pub relative_gap: f64,
    /// Topological entropy proxy; equal to `δ̂`.
    pub entropy: f64,
}

/// Slope of `log N_r(S(x, t))` over `t_window` against `δ̂` fitted on
/// `exponent_window` (the same window when `None`).
pub fn growth_vs_exponent(
    domain: &ConvexDomain,
    x: &ProjPoint,
    t_window: (f64, f64),
    r: f64,
    ball: &OrbitBall,
    exponent_window: Option<(f64, f64)>,
) -> Result<GrowthReport> {
    let (lo, hi) = t_window;
    if !(hi > lo) {
        return Err(GeomError::DegenerateWindow(format!("[{lo}, {hi}]")));
    }
    let steps = ((hi - lo).round() as usize).max(4);
    let ts: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let rows: Vec<(f64, usize)> = ts
        .par_iter()
        .map(|&t| Ok((t, sphere_net_count(domain, x, t, r)?)))
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|(t, n)| (*t, (*n as f64).ln())).collect();
    let (slope, _) = linear_fit(&pts);
    let est = estimate_critical_exponent(ball, exponent_window.unwrap_or(t_window))?;
    let delta_hat = est.delta_hat;
    let relative_gap = if delta_hat > 0.0 { (slope - delta_hat).abs() / delta_hat } else { f64::INFINITY };
    Ok(GrowthReport { rows, slope, delta_hat, relative_gap, entropy: delta_hat })
}
