//! Report and curve emission. Reports are JSON documents with stable field
//! names; curves are CSV with a header row, comma separators and
//! full-precision decimals so files round-trip losslessly. No timestamps
//! are written: identical configs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// The stable report envelope: verdict, named constants, residual norms
/// and witness points.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub verdict: String,
    pub constants: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    pub witnesses: Vec<Witness>,
    pub provenance: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(verdict: impl Into<String>) -> Self {
        Self {
            verdict: verdict.into(),
            constants: BTreeMap::new(),
            residuals: BTreeMap::new(),
            witnesses: Vec::new(),
            provenance: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.into(), value);
        self
    }

    pub fn residual(mut self, name: &str, value: f64) -> Self {
        self.residuals.insert(name.into(), value);
        self
    }

    pub fn provenance_entry(mut self, name: &str, value: &str) -> Self {
        self.provenance.insert(name.into(), value.into());
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

/// A sampled point attached to a verdict (negative discriminants, worst
/// residual nodes).
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub u1: f64,
    pub u2: f64,
    pub value: f64,
    pub label: String,
}

/// Full-precision decimal for lossless CSV round trips.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Write a CSV table: header row, LF endings, 17 significant digits.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut text = String::with_capacity(rows.len() * 64 + 64);
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt_full(*v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}
