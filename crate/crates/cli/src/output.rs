//! Tables, checks, reports and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| Cell::Num(*v)).collect());
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => format!("{v:?}"),
                Cell::Text(s) => s.clone(),
            }))?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    /// Array of row objects keyed by column name.
    pub fn to_json(&self) -> serde_json::Result<Vec<u8>> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .zip(r)
                    .map(|(k, c)| {
                        let v = match c {
                            Cell::Num(v) => {
                                serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into)
                            }
                            Cell::Text(s) => s.clone().into(),
                        };
                        (k.clone(), v)
                    })
                    .collect()
            })
            .collect();
        serde_json::to_vec_pretty(&rows)
    }
}

/// A residual compared with its tolerance; non-finite values fail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), value, tolerance, pass: value.is_finite() && value <= tolerance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything a run produced before it is written out.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Outcome {
    pub checks: Vec<Check>,
    /// Informational values that are not compared with a tolerance.
    pub summary: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub kind: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub passed: bool,
    pub residuals: Vec<Check>,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<OutputFile>) -> io::Result<()> {
    fs::write(dir.join(name), bytes)?;
    files.push(OutputFile { path: name.to_string(), sha256: sha256_hex(bytes) });
    Ok(())
}

/// Writes the tables, `report.json` and `manifest.json` into `dir`.
#[allow(clippy::too_many_arguments)]
pub fn emit(
    dir: &Path,
    scenario: &crate::scenario::Scenario,
    scenario_text: &str,
    outcome: &Outcome,
    format: Format,
    started_unix: u64,
    finished_unix: u64,
) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        let bytes = match format {
            Format::Csv => t.to_csv().map_err(io::Error::other)?,
            Format::Json => t.to_json().map_err(io::Error::other)?,
        };
        write(dir, &format!("{}.{}", t.name, format.extension()), &bytes, &mut files)?;
    }
    #[derive(Serialize)]
    struct Report<'a> {
        scenario: &'a crate::scenario::Scenario,
        passed: bool,
        checks: &'a [Check],
        summary: &'a BTreeMap<String, serde_json::Value>,
    }
    let report = Report { scenario, passed: outcome.passed(), checks: &outcome.checks, summary: &outcome.summary };
    write(dir, "report.json", &serde_json::to_vec_pretty(&report).map_err(io::Error::other)?, &mut files)?;
    let manifest = RunManifest {
        scenario: scenario.name.clone(),
        kind: scenario.kind.name().to_string(),
        scenario_sha256: sha256_hex(scenario_text.as_bytes()),
        seed: scenario.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        finished_unix,
        passed: outcome.passed(),
        residuals: outcome.checks.clone(),
        outputs: files,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest).map_err(io::Error::other)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_and_round_trips_floats() {
        let mut t = Table::new("t", &["a", "label"]);
        t.push(vec![Cell::Num(0.1), "x, \"y\"".into()]);
        t.push(vec![Cell::Num(1e-30), "plain".into()]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,label\n0.1,\"x, \"\"y\"\"\"\n1e-30,plain\n");
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push_nums(&[1.5, f64::NAN]);
        let v: serde_json::Value = serde_json::from_slice(&t.to_json().unwrap()).unwrap();
        assert_eq!(v[0]["a"], 1.5);
        assert!(v[0]["b"].is_null());
    }

    #[test]
    fn checks_fail_on_nan_and_excess() {
        assert!(Check::new("a", 1e-9, 1e-6).pass);
        assert!(!Check::new("a", 1e-3, 1e-6).pass);
        assert!(!Check::new("a", f64::NAN, 1e-6).pass);
    }
}
