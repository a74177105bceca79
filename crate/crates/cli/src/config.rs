//! Experiment configs: JSON files merged with command line overrides, then
//! resolved into built domains and groups before anything is computed.

use std::fmt;
use std::path::{Path, PathBuf};

use hilbert_core::{ConvexDomain, DomainSpec, GroupPresentation, GroupSpec, ProjPoint};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const EXPERIMENTS: [&str; 16] = [
    "dist",
    "flow-check",
    "busemann-check",
    "shadow-check",
    "orbit",
    "delta",
    "divergence",
    "ps",
    "shadow-lemma",
    "local-estimates",
    "bm-box",
    "volume-growth",
    "hex-check",
    "flat-growth",
    "birkhoff",
    "ergodicity",
];

pub const DEFAULT_SEED: u64 = 42;

/// Raw config as read from JSON. Every field is optional; unknown keys are
/// rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// Inline domain object or a path to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Value>,
    /// Inline group object or a path to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_word: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    /// Exponents `s` for the measure experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_window: Option<[f64; 2]>,
    /// Window for the critical exponent when it differs from `t_window`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent_window: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Chart coordinates of the basepoint `o` (also the viewpoint `x`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<Vec<f64>>,
    /// Chart coordinates of the observable's target point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    /// Chart centres of the minus and plus cells of a Bowen-Margulis box.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<[Vec<f64>; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    /// Flow times `T` for the Birkhoff experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ladder: Option<Vec<f64>>,
    /// Radii `r` for the flat model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ladder: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Acceptance interval for the main statistic, overriding the default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `other` win.
    pub fn merged(mut self, other: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            experiment, domain, group, max_word, seed, output, r, s_ladder, t_window, exponent_window, samples, basepoint,
            target, cells, starts, t_ladder, r_ladder, dt, expect
        );
        self
    }
}

/// Directories searched for relative fixture names, after the name itself.
fn fixture_dirs() -> Vec<PathBuf> {
    let mut dirs = vec![PathBuf::from("fixtures")];
    if let Some(d) = std::env::var_os("HILBERT_FIXTURES") {
        dirs.push(PathBuf::from(d));
    }
    dirs.push(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    dirs
}

pub fn find_file(name: &str) -> Result<PathBuf, ConfigError> {
    let direct = PathBuf::from(name);
    if direct.is_file() {
        return Ok(direct);
    }
    if direct.is_relative() {
        for d in fixture_dirs() {
            let p = d.join(name);
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(invalid(format!("file not found: {name}")))
}

/// A command line value is inline JSON when it starts with `{`, otherwise a
/// path.
pub fn json_or_path(arg: &str) -> Result<Value, ConfigError> {
    if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| invalid(e.to_string()))
    } else {
        Ok(Value::String(arg.to_string()))
    }
}

fn load<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<(T, Value), ConfigError> {
    let v = match v {
        Value::String(name) => {
            let path = find_file(name)?;
            let text = std::fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| invalid(format!("{what} {name}: {e}")))?
        }
        other => other.clone(),
    };
    let parsed = serde_json::from_value(v.clone()).map_err(|e| invalid(format!("{what}: {e}")))?;
    Ok((parsed, v))
}

/// Everything an experiment needs, validated.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub experiment: String,
    pub domain_spec: DomainSpec,
    pub domain: ConvexDomain,
    pub group: Option<GroupPresentation>,
    pub group_echo: Option<Value>,
    pub basepoint: ProjPoint,
    pub seed: u64,
    pub output: PathBuf,
    pub raw: ExperimentConfig,
}

impl Resolved {
    pub fn is_unit_disk(&self) -> bool {
        is_unit_ball(&self.domain_spec) && self.domain.dim() == 2
    }

    pub fn is_ellipsoid(&self) -> bool {
        matches!(self.domain_spec, DomainSpec::Ellipsoid { .. })
    }

    pub fn group(&self) -> Result<&GroupPresentation, hilbert_core::GeomError> {
        self.group.as_ref().ok_or_else(|| hilbert_core::GeomError::InvalidInput("experiment needs a group".into()))
    }

    pub fn window(&self, default: (f64, f64)) -> (f64, f64) {
        self.raw.t_window.map(|w| (w[0], w[1])).unwrap_or(default)
    }
}

pub fn is_unit_ball(spec: &DomainSpec) -> bool {
    match spec {
        DomainSpec::Ellipsoid { dim, center, shape } => {
            let centred = center.as_ref().is_none_or(|c| c.iter().all(|v| *v == 0.0));
            let round = shape.as_ref().is_none_or(|m| {
                m.len() == *dim && m.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, v)| *v == if i == j { 1.0 } else { 0.0 }))
            });
            centred && round
        }
        _ => false,
    }
}

fn point_in(domain: &ConvexDomain, coords: &[f64]) -> Result<ProjPoint, ConfigError> {
    if coords.len() != domain.dim() {
        return Err(invalid(format!("point needs {} chart coordinates", domain.dim())));
    }
    let p = domain.point(coords).map_err(|e| invalid(format!("point {coords:?}: {e}")))?;
    match domain.contains(&p) {
        Ok(true) => Ok(p),
        _ => Err(invalid(format!("point {coords:?} is not interior"))),
    }
}

/// Default basepoint: the unit disk gets the point (0.1, 0.05), off every
/// fixed point of the triangle group; other domains use their centre.
fn default_basepoint(domain: &ConvexDomain, spec: &DomainSpec) -> ProjPoint {
    if is_unit_ball(spec) && domain.dim() == 2 {
        if let Ok(p) = point_in(domain, &[0.1, 0.05]) {
            return p;
        }
    }
    domain.center()
}

fn default_domain(experiment: &str) -> Value {
    match experiment {
        "hex-check" | "flat-growth" => serde_json::json!({"type": "simplex", "dim": 2}),
        _ => serde_json::json!({"type": "ellipsoid", "dim": 2}),
    }
}

fn default_group(experiment: &str, disk: bool) -> Option<&'static str> {
    match experiment {
        "flat-growth" => Some("flat_z2_simplex.json"),
        "dist" | "flow-check" | "shadow-check" | "hex-check" => None,
        "volume-growth" if !disk => None,
        _ if disk => Some("fuchsian_triangle_237.json"),
        _ => None,
    }
}

fn needs_group(experiment: &str) -> bool {
    !matches!(experiment, "dist" | "flow-check" | "busemann-check" | "shadow-check" | "hex-check" | "volume-growth")
}

fn positive(name: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(invalid(format!("{name} must be positive"))),
        _ => Ok(()),
    }
}

fn window_ok(name: &str, w: Option<[f64; 2]>) -> Result<(), ConfigError> {
    match w {
        Some([a, b]) if !(a.is_finite() && b.is_finite() && b > a) => Err(invalid(format!("{name} must be an increasing pair"))),
        _ => Ok(()),
    }
}

/// Checks the config and builds everything it references. Nothing is
/// written and no experiment runs before this succeeds.
pub fn resolve(cfg: ExperimentConfig) -> Result<Resolved, ConfigError> {
    let experiment = cfg.experiment.clone().ok_or_else(|| invalid("no experiment given"))?;
    if !EXPERIMENTS.contains(&experiment.as_str()) {
        return Err(invalid(format!("unknown experiment {experiment:?}; expected one of {}", EXPERIMENTS.join(", "))));
    }
    positive("r", cfg.r)?;
    positive("dt", cfg.dt)?;
    window_ok("t_window", cfg.t_window)?;
    window_ok("exponent_window", cfg.exponent_window)?;
    if let Some([a, b]) = cfg.expect {
        if !(b >= a) {
            return Err(invalid("expect must be an interval"));
        }
    }
    for (name, ladder) in [("s_ladder", &cfg.s_ladder), ("t_ladder", &cfg.t_ladder), ("r_ladder", &cfg.r_ladder)] {
        if let Some(l) = ladder {
            if l.is_empty() || l.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(invalid(format!("{name} must be a nonempty list of positive numbers")));
            }
        }
    }
    if cfg.samples == Some(0) {
        return Err(invalid("samples must be positive"));
    }
    if cfg.max_word == Some(0) {
        return Err(invalid("max_word must be positive"));
    }

    let domain_value = cfg.domain.clone().unwrap_or_else(|| default_domain(&experiment));
    let (domain_spec, _): (DomainSpec, Value) = load(&domain_value, "domain")?;
    let domain = domain_spec.build().map_err(|e| invalid(format!("domain: {e}")))?;
    let disk = is_unit_ball(&domain_spec) && domain.dim() == 2;

    let group_value = match &cfg.group {
        Some(v) => Some(v.clone()),
        None => default_group(&experiment, disk).map(|s| Value::String(s.into())),
    };
    let (group, group_echo) = match group_value {
        Some(v) => {
            let (spec, echo): (GroupSpec, Value) = load(&v, "group")?;
            let g = spec.build().map_err(|e| invalid(format!("group: {e}")))?;
            if g.generators().first().is_some_and(|m| m.matrix().nrows() != domain.dim() + 1) {
                return Err(invalid("group matrices do not match the domain dimension"));
            }
            g.validate(&domain, 32, cfg.seed.unwrap_or(DEFAULT_SEED))
                .map_err(|e| invalid(format!("group does not act on the domain: {e}")))?;
            (Some(g), Some(echo))
        }
        None if needs_group(&experiment) => return Err(invalid(format!("{experiment} needs a group"))),
        None => (None, None),
    };

    let basepoint = match &cfg.basepoint {
        Some(c) => point_in(&domain, c)?,
        None => default_basepoint(&domain, &domain_spec),
    };
    if let Some(c) = &cfg.target {
        point_in(&domain, c)?;
    }
    if let Some(cells) = &cfg.cells {
        for c in cells {
            point_in(&domain, c)?;
        }
    } else if experiment == "bm-box" && !disk {
        return Err(invalid("bm-box needs cell centres on this domain"));
    }

    Ok(Resolved {
        experiment,
        domain_spec,
        domain,
        group,
        group_echo,
        basepoint,
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        output: cfg.output.clone().unwrap_or_else(|| PathBuf::from("out")),
        raw: cfg,
    })
}
