//! Batch runner for the Hilbert geometry experiments: one experiment per
//! invocation, a CSV table plus a JSON summary per run.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use serde_json::{json, Value};

pub use config::{resolve, ConfigError, ExperimentConfig, Resolved};
pub use experiments::{run_experiment, Outcome};
pub use output::Table;

/// Exit status of a run.
#[derive(Debug)]
pub enum RunError {
    /// Exit code 2; nothing was written.
    Config(ConfigError),
    /// Exit code 1; partial outputs and a MANIFEST were written.
    Compute(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Compute(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Compute(e) => write!(f, "computation failed: {e}"),
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub summary: Value,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

/// Everything needed to reproduce the run; worker count and output
/// location are left out so summaries compare equal across them.
fn input_echo(c: &Resolved) -> Value {
    let mut raw = c.raw.clone();
    raw.output = None;
    let basepoint = c.domain.chart_coords(&c.basepoint).ok();
    json!({
        "config": raw,
        "domain": c.domain_spec,
        "group": c.group_echo,
        "basepoint": basepoint,
    })
}

/// Runs the experiment in a pool of `workers` threads (all cores when
/// `None`) and returns the table and summary without writing anything.
pub fn compute(c: &Resolved, workers: Option<usize>) -> (Table, Result<Value, String>) {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let mut table = Table::default();
    let result = match builder.build() {
        Ok(pool) => pool.install(|| run_experiment(c, &mut table)).map_err(|e| e.to_string()),
        Err(e) => Err(e.to_string()),
    };
    let summary = result.map(|o| {
        json!({
            "experiment": c.experiment,
            "seed": c.seed,
            "input": input_echo(c),
            "results": o.results,
            "pass": o.pass,
        })
    });
    (table, summary)
}

/// Validates, computes and writes the outputs of one experiment.
pub fn run(cfg: ExperimentConfig, workers: Option<usize>) -> Result<RunReport, RunError> {
    let c = resolve(cfg).map_err(RunError::Config)?;
    let (table, summary) = compute(&c, workers);
    match summary {
        Ok(s) => {
            let files = output::write_run(&c.output, &c.experiment, &table, Some(&s), None)
                .map_err(|e| RunError::Compute(format!("writing outputs: {e}")))?;
            let pass = s["pass"].as_bool().unwrap_or(false);
            Ok(RunReport { summary: s, pass, files })
        }
        Err(e) => {
            output::write_run(&c.output, &c.experiment, &table, None, Some(&e))
                .map_err(|w| RunError::Compute(format!("{e}; writing outputs: {w}")))?;
            Err(RunError::Compute(e))
        }
    }
}
