//! Experiment reports.
//!
//! The text form is line oriented:
//!
//! ```text
//! # fjlt report
//! [config]
//! command = "rip"
//! n = 16
//! [summary]
//! delta_hat_mean = 0.42
//! [rows]
//! phi_seed,delta_hat,...
//! 123,0.40,...
//! [timing]
//! elapsed_seconds = 0.01
//! ```
//!
//! Config values are JSON literals so the section parses back into the exact
//! configuration that produced the report. Everything except `[timing]` is a
//! deterministic function of the config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const REPORT_BANNER: &str = "# fjlt report";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub config: Map<String, Value>,
    pub summary: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub timing: Vec<(String, String)>,
    /// Validation failures; a non-empty list means the run did not pass.
    pub failures: Vec<String>,
}

/// Shortest round-trip form of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl Report {
    pub fn new(config: Map<String, Value>) -> Self {
        Self { config, ..Default::default() }
    }

    pub fn summary(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn summary_f64(&mut self, key: &str, value: f64) {
        self.summary(key, fmt_f64(value));
    }

    pub fn get_summary(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set_columns(&mut self, cols: &[&str]) {
        self.columns = cols.iter().map(|c| c.to_string()).collect();
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.failures.push(msg.into());
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Text form without the `[timing]` section.
    pub fn deterministic_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{REPORT_BANNER}").unwrap();
        writeln!(out, "[config]").unwrap();
        for (k, v) in &self.config {
            writeln!(out, "{k} = {v}").unwrap();
        }
        writeln!(out, "[summary]").unwrap();
        for (k, v) in &self.summary {
            writeln!(out, "{k} = {v}").unwrap();
        }
        writeln!(out, "status = {}", if self.passed() { "pass" } else { "fail" }).unwrap();
        for f in &self.failures {
            writeln!(out, "failure = {f}").unwrap();
        }
        if !self.columns.is_empty() {
            writeln!(out, "[rows]").unwrap();
            out.push_str(&self.to_csv());
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = self.deterministic_text();
        if !self.timing.is_empty() {
            out.push_str("[timing]\n");
            for (k, v) in &self.timing {
                writeln!(out, "{k} = {v}").unwrap();
            }
        }
        out
    }

    /// The `[rows]` table as CSV with a header line.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::WriterBuilder::new().from_writer(Vec::new());
        wtr.write_record(&self.columns).unwrap();
        for r in &self.rows {
            wtr.write_record(r).unwrap();
        }
        String::from_utf8(wtr.into_inner().unwrap()).unwrap()
    }

    /// Writes the text report to `path` and the table to `path` + `.csv`.
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.to_text())?;
        let mut csv_path = path.as_os_str().to_owned();
        csv_path.push(".csv");
        let csv_path = PathBuf::from(csv_path);
        std::fs::write(&csv_path, self.to_csv())?;
        Ok(csv_path)
    }
}

/// Splits report text into sections of raw lines, in order of appearance.
fn sections(text: &str) -> Result<Vec<(String, Vec<&str>)>> {
    let mut lines = text.lines();
    if lines.next() != Some(REPORT_BANNER) {
        return Err(Error::Format("missing report banner".into()));
    }
    let mut out: Vec<(String, Vec<&str>)> = Vec::new();
    for line in lines {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.push((name.to_string(), Vec::new()));
        } else if let Some((_, body)) = out.last_mut() {
            body.push(line);
        } else {
            return Err(Error::Format(format!("line outside any section: {line}")));
        }
    }
    Ok(out)
}

/// Recovers the `[config]` section of a report.
pub fn parse_config(text: &str) -> Result<Map<String, Value>> {
    let secs = sections(text)?;
    let (_, body) = secs
        .iter()
        .find(|(name, _)| name == "config")
        .ok_or_else(|| Error::Format("report has no [config] section".into()))?;
    let mut map = Map::new();
    for line in body {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::Format(format!("bad config line: {line}")))?;
        let value: Value = serde_json::from_str(v).map_err(|e| Error::Format(format!("config {k}: {e}")))?;
        map.insert(k.to_string(), value);
    }
    Ok(map)
}

/// Report text with the `[timing]` section removed.
pub fn strip_timing(text: &str) -> String {
    let mut out = String::new();
    let mut in_timing = false;
    for line in text.lines() {
        if line.starts_with('[') {
            in_timing = line == "[timing]";
        }
        if !in_timing {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}
