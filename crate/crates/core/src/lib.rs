//! Computational Hilbert geometry of properly convex projective domains.
//!
//! Points and maps live in homogeneous coordinates ([`projective`]); domains
//! ([`domain`]) provide boundary hits, supports and the Hilbert metric; the
//! remaining modules build the geodesic flow, Busemann functions, orbit
//! enumeration and the measures on top of them.

pub mod asymptotics;
pub mod domain;
pub mod dynamics;
pub mod error;
pub mod flat;
pub mod flow;
pub mod hull;
pub mod measures;
pub mod orbit;
pub mod projective;

/// Global tolerance for coincidence and collinearity tests.
pub const EPS_GEOM: f64 = 1e-10;

pub use asymptotics::{busemann, busemann_at, busemann_limit_oracle, horosphere_point, leaf_relation, lines_asymptotic, shadow_busemann_bound_check, shadow_contains, BoundaryDirection, LeafRelation, LeafReport, ShadowBound};
pub use domain::{BoundaryClassification, BoundaryPoint, ConvexDomain, DomainKind, DomainSpec, SupportingHyperplane};
pub use dynamics::{birkhoff_average, birkhoff_run, ergodicity_dispersion, growth_vs_exponent, BirkhoffRun, DispersionReport, GrowthReport, ObservableSpec};
pub use error::{GeomError, Result};
pub use flat::{flat_net_count, hex_norm, triangle_to_hex, HexChart};
pub use flow::{endpoints, flow, min_dist_to_ray, UnitTangent};
pub use hull::{hull_2d, hull_3d, limit_set_hull, Hull};
pub use measures::{bm_box_mass, bm_box_report, local_estimate_report, ps_approx, shadow_lemma_report, shadow_mass, sphere_net_count, sphere_net_count_with, triangle_mass_bound, Atom, AtomicBoundaryMeasure, BMBox, BMReport, ShadowCell, ShadowOptions, ShadowReport, ShadowRow};
pub use orbit::{classify_element, diagonal, divergence_diagnostic, enumerate_orbit, enumerate_orbit_with, estimate_critical_exponent, orbit_count, poincare_partial, DivergenceReport, ElementClass, EnumerateOptions, ExponentEstimate, GroupPresentation, GroupSpec, OrbitBall, OrbitEntry};
pub use projective::{apply, canonicalize, cross_ratio, AffineChart, ProjPoint, ProjTransform};
