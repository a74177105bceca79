//! CSV tables and the files written for a run.

use std::io;
use std::path::{Path, PathBuf};

use serde_json::Value;

/// Rows are kept as formatted strings so a failed run can still flush what
/// it produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn set_header(&mut self, names: &[&str]) {
        self.header = names.iter().map(|s| s.to_string()).collect();
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> io::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| io::Error::other(e.to_string()))
    }
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_u(x: usize) -> String {
    x.to_string()
}

/// Writes the CSV, the JSON summary (when there is one) and the MANIFEST.
/// Returns the paths written.
pub fn write_run(dir: &Path, name: &str, table: &Table, summary: Option<&Value>, failure: Option<&str>) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if !table.header.is_empty() {
        let p = dir.join(format!("{name}.csv"));
        std::fs::write(&p, table.to_csv()?)?;
        written.push(p);
    }
    if let Some(s) = summary {
        let p = dir.join(format!("{name}.json"));
        let mut text = serde_json::to_string_pretty(s).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(&p, text)?;
        written.push(p);
    }
    let mut manifest = format!("experiment: {name}\nstatus: {}\n", if failure.is_some() { "failed" } else { "ok" });
    if let Some(f) = failure {
        manifest.push_str(&format!("error: {f}\nrows written before the failure: {}\n", table.rows.len()));
    }
    for p in &written {
        manifest.push_str(&format!("file: {}\n", p.file_name().unwrap().to_string_lossy()));
    }
    let p = dir.join("MANIFEST");
    std::fs::write(&p, manifest)?;
    written.push(p);
    Ok(written)
}
