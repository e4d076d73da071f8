use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Diagnostic, ExperimentConfig};
use crate::error::Result;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// One pass/fail check with its measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        target: f64,
        tolerance: f64,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            measured,
            target,
            tolerance,
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub study: String,
    pub seed: u64,
    pub passed: bool,
    pub gates: Vec<Gate>,
    pub aborted_paths: usize,
    pub warnings: Vec<Diagnostic>,
}

/// A CSV table held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Resolved<'a> {
    code_version: &'a str,
    config: &'a ExperimentConfig,
    out: PathBuf,
}

/// Writes `config.resolved.json`, every table, and `report.json`.
pub fn write_all(
    dir: &Path,
    config: &ExperimentConfig,
    tables: &[Table],
    report: &Report,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let resolved = Resolved {
        code_version: env!("CARGO_PKG_VERSION"),
        config,
        out: dir.to_path_buf(),
    };
    let p = dir.join("config.resolved.json");
    fs::write(&p, serde_json::to_string_pretty(&resolved)? + "\n")?;
    written.push(p);
    for t in tables {
        written.push(t.write(dir)?);
    }
    let p = dir.join("report.json");
    fs::write(&p, serde_json::to_string_pretty(report)? + "\n")?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for x in [0.1, 1.0, 1e-20, std::f64::consts::FRAC_1_SQRT_2, -3.25e300] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(std::f64::consts::FRAC_1_SQRT_2), "0.7071067811865476");
    }

    #[test]
    fn table_writes_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![num(1.5), num(2.0)]);
        let p = t.write(dir.path()).unwrap();
        assert_eq!(std::fs::read_to_string(p).unwrap(), "a,b\n1.5,2.0\n");
    }
}
