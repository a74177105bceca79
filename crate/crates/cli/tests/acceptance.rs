//! Acceptance suite: one PASS/FAIL line per criterion, with the wall-clock
//! budget counted as part of the criterion. Exits non-zero if any fails.

use std::time::{Duration, Instant};

use hilbert_cli::{compute, resolve, ExperimentConfig};
use hilbert_core::{ConvexDomain, ProjTransform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<(bool, String), String>;

/// Runs one experiment in process and returns its `results` and `pass`.
fn experiment(cfg: Value) -> Result<(Value, bool), String> {
    let (results, pass, _) = experiment_csv(cfg, None)?;
    Ok((results, pass))
}

fn experiment_csv(cfg: Value, workers: Option<usize>) -> Result<(Value, bool, Vec<u8>), String> {
    let c = ExperimentConfig::from_json(&cfg.to_string()).map_err(|e| e.to_string())?;
    let c = resolve(c).map_err(|e| e.to_string())?;
    let (table, summary) = compute(&c, workers);
    let s = summary?;
    let csv = table.to_csv().map_err(|e| e.to_string())?;
    Ok((s["results"].clone(), s["pass"].as_bool() == Some(true), csv))
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or(f64::NAN)
}

fn disk() -> Value {
    json!({"type": "ellipsoid", "dim": 2})
}

fn c1_metric_oracle() -> Check {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for dim in [1, 2] {
        let (r, _) = experiment(json!({"experiment": "dist", "domain": {"type": "ellipsoid", "dim": dim}, "samples": 10_000}))?;
        if r["oracle"] != "closed form" {
            return Ok((false, format!("dim {dim}: no closed-form oracle")));
        }
        let m = num(&r, "max_residual");
        worst = worst.max(m);
        notes.push(format!("dim {dim} max residual {m:.2e}"));
    }
    Ok((worst <= 1e-9, notes.join(", ")))
}

fn c2_projective_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for d in [ConvexDomain::unit_ball(2), ConvexDomain::simplex(2)] {
        let d = d.map_err(|e| e.to_string())?;
        let mut done = 0;
        while done < 100 {
            let rows: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| rng.gen_range(-0.3..0.3) + if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
            let Ok(t) = ProjTransform::from_rows(&rows) else { continue };
            let Ok(image) = d.transformed(&t) else { continue };
            done += 1;
            for _ in 0..5 {
                let x = d.sample_interior(&mut rng, 0.9).map_err(|e| e.to_string())?;
                let y = d.sample_interior(&mut rng, 0.9).map_err(|e| e.to_string())?;
                let before = d.hilbert_distance(&x, &y).map_err(|e| e.to_string())?;
                let tx = t.apply(&x).map_err(|e| e.to_string())?;
                let ty = t.apply(&y).map_err(|e| e.to_string())?;
                let after = image.hilbert_distance(&tx, &ty).map_err(|e| e.to_string())?;
                worst = worst.max((before - after).abs());
            }
        }
    }
    Ok((worst <= 1e-8, format!("200 maps on disk and triangle, max residual {worst:.2e}")))
}

fn c3_flow() -> Check {
    let domains = [disk(), json!({"type": "simplex", "dim": 2}), json!("quadrant_domain.json")];
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for d in domains {
        let (r, _) = experiment(json!({"experiment": "flow-check", "domain": d, "samples": 1000}))?;
        let s = num(&r, "max_speed_residual");
        let a = num(&r, "max_additivity_residual");
        ok &= s <= 1e-9 && a <= 1e-9;
        worst = worst.max(s).max(a);
    }
    Ok((ok, format!("disk, triangle, segment: worst residual {worst:.2e}")))
}

fn c4_busemann() -> Check {
    let (r, _) = experiment(json!({"experiment": "busemann-check", "samples": 500}))?;
    let l = num(&r, "max_limit_residual");
    let c = num(&r, "max_cocycle_residual");
    let a = num(&r, "max_antisymmetry_residual");
    let e = num(&r, "max_equivariance_residual");
    Ok((
        l <= 1e-6 && c <= 1e-9 && a <= 1e-9 && e <= 1e-8,
        format!("limit {l:.2e}, cocycle {c:.2e}, antisymmetry {a:.2e}, equivariance {e:.2e}"),
    ))
}

fn c5_shadow() -> Check {
    let (r, _) = experiment(json!({"experiment": "shadow-check", "samples": 500}))?;
    let w = num(&r, "worst_violation");
    Ok((w <= 1e-8, format!("500 instances, worst violation {w:.2e}")))
}

fn c6_exponents() -> Check {
    let (f, _) = experiment(json!({"experiment": "delta", "group": "fuchsian_triangle_237.json", "max_word": 12}))?;
    let (cy, _) = experiment(json!({
        "experiment": "delta", "domain": "quadrant_domain.json", "group": "cyclic_hyperbolic.json",
        "max_word": 58, "exponent_window": [25.0, 40.0],
    }))?;
    let (z2, _) = experiment(json!({
        "experiment": "delta", "domain": {"type": "simplex", "dim": 2}, "group": "flat_z2_simplex.json",
        "max_word": 46, "exponent_window": [40.0, 60.0],
    }))?;
    let (orbit, _) = experiment(json!({
        "experiment": "orbit", "domain": "quadrant_domain.json", "group": "cyclic_hyperbolic.json", "max_word": 58,
    }))?;
    let (df, dc, dz) = (num(&f, "delta_hat"), num(&cy, "delta_hat"), num(&z2, "delta_hat"));
    let exact = orbit["closed_form_exact"] == true;
    Ok((
        (0.85..=1.1).contains(&df) && dc <= 0.05 && dz <= 0.05 && exact,
        format!("Fuchsian {df:.4}, cyclic {dc:.4}, Z2 {dz:.4}, cyclic closed form exact: {exact}"),
    ))
}

fn c7_shadow_lemma() -> Check {
    let (sl, _) = experiment(json!({"experiment": "shadow-lemma", "group": "fuchsian_triangle_237.json", "r": 2.0}))?;
    let change = num(&sl, "change_factor");
    let (ps, _) = experiment(json!({"experiment": "ps", "group": "fuchsian_triangle_237.json"}))?;
    let rule = ps["measures"]
        .as_array()
        .map(|m| m.iter().map(|x| num(x, "max_rule_residual")).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    let rows = &sl["rows_d_range"];
    Ok((
        change < 2.0 && rule <= 1e-9,
        format!("C(r=2.5)/C(r=2) = {change:.3} on d in {rows}, transformation rule residual {rule:.2e}"),
    ))
}

fn c8_volume() -> Check {
    let (disk_run, _) = experiment(json!({"experiment": "volume-growth", "t_window": [2.0, 6.0]}))?;
    let gap = num(&disk_run, "relative_gap");
    let (tri, _) = experiment(json!({"experiment": "volume-growth", "domain": {"type": "simplex", "dim": 2}, "t_window": [2.0, 10.0]}))?;
    let lo = tri["count_per_t_range"][0].as_f64().unwrap_or(f64::NAN);
    let hi = tri["count_per_t_range"][1].as_f64().unwrap_or(f64::NAN);
    Ok((
        gap <= 0.15 && lo >= 2.0 && hi <= 10.0,
        format!("disk slope vs exponent gap {:.1}%, triangle N_t/t in [{lo:.2}, {hi:.2}] (bounds [2, 10])", 100.0 * gap),
    ))
}

fn c9_flat() -> Check {
    let (hex, _) = experiment(json!({"experiment": "hex-check", "samples": 10_000}))?;
    let res = num(&hex, "max_residual");
    let exact = hex["hex_norm_examples_exact"] == true;
    let (flat, _) = experiment(json!({"experiment": "flat-growth", "r_ladder": [10.0, 20.0, 40.0, 80.0]}))?;
    let spread = num(&flat, "spread");
    Ok((
        res < 1e-9 && exact && spread <= 2.0,
        format!("hex residual {res:.2e}, norm examples exact: {exact}, lattice count spread {spread:.3}"),
    ))
}

fn c10_bm() -> Check {
    let (r, _) = experiment(json!({"experiment": "bm-box"}))?;
    let foot = num(&r, "foot_spread");
    let doubling = r["time_doubling_exact"] == true;
    let flip = num(&r, "flip_residual");
    let tr = num(&r, "max_translate_residual");
    Ok((
        foot <= 1e-9 && doubling && flip <= 1e-9 && tr <= 0.01,
        format!("foot spread {foot:.2e}, doubling exact: {doubling}, flip {flip:.2e}, translates {tr:.2e}"),
    ))
}

fn c11_ergodicity() -> Check {
    let (r, pass) = experiment(json!({"experiment": "ergodicity"}))?;
    Ok((pass, format!("deviations {}, verdict: {}", r["deviations"], r["verdict"].as_str().unwrap_or("?"))))
}

/// Small configurations of every experiment, run with 1 and 4 workers.
fn c12_determinism() -> Check {
    let fuchsian = "fuchsian_triangle_237.json";
    let configs = [
        json!({"experiment": "dist", "samples": 300}),
        json!({"experiment": "flow-check", "samples": 100}),
        json!({"experiment": "busemann-check", "samples": 50}),
        json!({"experiment": "shadow-check", "samples": 50}),
        json!({"experiment": "orbit", "max_word": 8}),
        json!({"experiment": "delta", "max_word": 8}),
        json!({"experiment": "divergence", "max_word": 8}),
        json!({"experiment": "ps", "group": fuchsian, "max_word": 6}),
        json!({"experiment": "shadow-lemma", "max_word": 10, "samples": 8}),
        json!({"experiment": "local-estimates", "max_word": 10, "samples": 3}),
        json!({"experiment": "bm-box", "max_word": 4}),
        json!({"experiment": "volume-growth"}),
        json!({"experiment": "hex-check", "samples": 300}),
        json!({"experiment": "flat-growth", "r_ladder": [10.0, 20.0]}),
        json!({"experiment": "birkhoff", "t_ladder": [10.0]}),
        json!({"experiment": "ergodicity", "starts": 10, "t_ladder": [20.0, 40.0]}),
    ];
    let mut differing = Vec::new();
    for cfg in &configs {
        let (_, _, a) = experiment_csv(cfg.clone(), Some(1))?;
        let (_, _, b) = experiment_csv(cfg.clone(), Some(4))?;
        if a != b || a.is_empty() {
            differing.push(cfg["experiment"].as_str().unwrap_or("?").to_string());
        }
    }
    // The binary, end to end: same config and seed, different worker counts.
    let bin = env!("CARGO_BIN_EXE_hilbert");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (k, w) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let st = std::process::Command::new(bin)
            .args(["run", "shadow-check", "--seed", "7", "--workers", w, "--out-dir"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !st.status.success() {
            return Err(format!("binary exited with {}", st.status));
        }
        let csv = std::fs::read(out.join("shadow-check.csv")).map_err(|e| e.to_string())?;
        let js = std::fs::read(out.join("shadow-check.json")).map_err(|e| e.to_string())?;
        outputs.push((csv, js));
    }
    if outputs.windows(2).any(|w| w[0] != w[1]) {
        differing.push("binary shadow-check".into());
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            "16 experiments at 1 vs 4 workers and 3 binary runs: byte-identical".into()
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    ))
}

fn main() {
    let criteria: [(usize, &str, u64, fn() -> Check); 12] = [
        (1, "metric oracle", 1, c1_metric_oracle),
        (2, "projective invariance", 5, c2_projective_invariance),
        (3, "geodesic flow", 5, c3_flow),
        (4, "Busemann functions", 30, c4_busemann),
        (5, "shadow containment", 30, c5_shadow),
        (6, "critical exponents", 180, c6_exponents),
        (7, "shadow lemma", 120, c7_shadow_lemma),
        (8, "volume growth", 120, c8_volume),
        (9, "flat model", 10, c9_flat),
        (10, "Bowen-Margulis boxes", 60, c10_bm),
        (11, "ergodicity probe", 300, c11_ergodicity),
        (12, "determinism", 600, c12_determinism),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(budget);
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_time, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {detail} ({:.1} s, budget {budget} s)",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
