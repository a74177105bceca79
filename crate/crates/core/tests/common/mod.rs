#![allow(dead_code)]

use hilbert_core::{ConvexDomain, DomainSpec, GroupPresentation, GroupSpec};

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn group(name: &str) -> GroupPresentation {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    let spec: GroupSpec = serde_json::from_str(&text).unwrap();
    spec.build().unwrap()
}

pub fn domain(name: &str) -> ConvexDomain {
    let text = std::fs::read_to_string(fixture_path(name)).unwrap();
    let spec: DomainSpec = serde_json::from_str(&text).unwrap();
    spec.build().unwrap()
}

pub fn fuchsian() -> GroupPresentation {
    group("fuchsian_triangle_237.json")
}

pub fn disk() -> ConvexDomain {
    ConvexDomain::unit_ball(2).unwrap()
}
