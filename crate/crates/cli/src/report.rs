//! Flat JSON reports, CSV tables and assertion lines.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const TOOL_VERSION: &str = concat!("cusplab ", env!("CARGO_PKG_VERSION"));

/// One declared assertion of a command.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Flattens nested objects and arrays into `prefix_key` / `prefix_index` entries. Numbers become
/// floats; non-finite floats (serialized as null) are kept as null.
pub fn flatten(prefix: &str, value: &Value, out: &mut Map<String, Value>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}_{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::Number(n) => {
            let f = n.as_f64().expect("JSON numbers are representable as f64");
            out.insert(prefix.to_string(), Value::from(f));
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

/// Builds the flat report: version, command, results, assertion tally and the resolved config
/// under `config_`.
pub fn build<R: Serialize, C: Serialize>(command: &str, results: &R, checks: &[Check], config: &C) -> Value {
    let mut out = Map::new();
    out.insert("tool_version".into(), Value::from(TOOL_VERSION));
    out.insert("command".into(), Value::from(command));
    let passed = checks.iter().filter(|c| c.pass).count();
    out.insert("assertions_total".into(), Value::from(checks.len() as f64));
    out.insert("assertions_passed".into(), Value::from(passed as f64));
    flatten("", &serde_json::to_value(results).expect("results serialize"), &mut out);
    flatten("config", &serde_json::to_value(config).expect("config serializes"), &mut out);
    Value::Object(out)
}

/// `true` when the report holds a null where a number was expected.
pub fn has_non_finite(report: &Value) -> bool {
    report.as_object().is_some_and(|m| m.values().any(Value::is_null))
}

/// Comma-separated table with a header row and LF line endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>.csv`.
pub fn write(dir: &Path, stem: &str, report: &Value, table: &Table) -> Result<(PathBuf, PathBuf), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let json_path = dir.join(format!("{stem}.json"));
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(&json_path, text).map_err(|e| CliError::Io(format!("{}: {e}", json_path.display())))?;
    fs::write(&csv_path, table.render()).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    Ok((json_path, csv_path))
}
