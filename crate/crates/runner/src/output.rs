//! Tabular results and their CSV/JSON serialization.
//!
//! Every float is rounded to 12 significant digits before it is written, so files are
//! bit-stable across platforms for a fixed seed and version.

use serde::Serialize;
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::Format;
use crate::error::{Result, RunnerError};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(name: &str, columns: Vec<String>) -> Self {
        Self {
            name: name.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(format_cell).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn to_json(&self) -> Value {
        Value::Object(
            self.columns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    (
                        c.clone(),
                        Value::Array(self.rows.iter().map(|r| cell_json(&r[i])).collect()),
                    )
                })
                .collect(),
        )
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest text that reads back as the 12-digit rounded value.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{:?}", round12(x))
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(x) => format_float(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Text(t) if t.contains([',', '"', '\n']) => format!("\"{}\"", t.replace('"', "\"\"")),
        Cell::Text(t) => t.clone(),
        Cell::Empty => String::new(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(x) => num(*x),
        Cell::Int(i) => Value::from(*i),
        Cell::Text(t) => Value::String(t.clone()),
        Cell::Empty => Value::Null,
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().expect("f64")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| RunnerError::Serialize(e.to_string()))
}

/// Everything a scenario produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Structured result, written whole in JSON mode.
    pub data: Value,
    /// Headline numbers echoed in the run report.
    pub metrics: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn check_metrics(&self) -> Result<()> {
        match self.metrics.iter().find(|(_, v)| !v.is_finite()) {
            Some((k, _)) => Err(RunnerError::NonFinite(k.clone())),
            None => Ok(()),
        }
    }
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|source| RunnerError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn json_text(v: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| RunnerError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes the outcome into `dir` and returns the files written.
///
/// CSV mode writes one `<table>.csv` per table. JSON mode writes `<stem>.json` holding
/// all tables (column-major), the structured result and the metrics.
pub fn emit_outputs(outcome: &Outcome, dir: &Path, stem: &str, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| RunnerError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    match format {
        Format::Csv => outcome
            .tables
            .iter()
            .map(|t| write(dir.join(format!("{}.csv", t.name)), &t.to_csv()))
            .collect(),
        Format::Json => {
            let mut root = Map::new();
            root.insert(
                "tables".into(),
                Value::Object(outcome.tables.iter().map(|t| (t.name.clone(), t.to_json())).collect()),
            );
            root.insert("result".into(), round_json(outcome.data.clone()));
            root.insert(
                "metrics".into(),
                Value::Object(outcome.metrics.iter().map(|(k, v)| (k.clone(), num(*v))).collect()),
            );
            Ok(vec![write(
                dir.join(format!("{stem}.json")),
                &json_text(&Value::Object(root))?,
            )?])
        }
    }
}

/// Human-readable summary of metrics, one per line.
pub fn metrics_text(metrics: &BTreeMap<String, f64>) -> String {
    let mut s = String::new();
    for (k, v) in metrics {
        let _ = writeln!(s, "{k} = {}", format_float(*v));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_float(0.402), "0.402");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(2.0 / 3.0 * 1e-9), "6.66666666667e-10");
        assert_eq!(format_float(1234567.0), "1234567.0");
        assert_eq!(format_float(0.0), "0.0");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(round12(round12(std::f64::consts::PI)), round12(std::f64::consts::PI));
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("demo", &["n", "label", "x", "ref"]);
        t.push(vec![1usize.into(), "a,b".into(), 0.5.into(), None.into()]);
        assert_eq!(t.to_csv(), "n,label,x,ref\n1,\"a,b\",0.5,\n");
    }

    #[test]
    fn emit_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("series", &["t", "p"]);
        t.push(vec![0.0.into(), (1.0f64 / 7.0).into()]);
        let out = Outcome {
            tables: vec![t],
            data: serde_json::json!({ "x": 1.0 / 3.0 }),
            metrics: BTreeMap::from([("f".to_string(), 0.25)]),
        };
        let csv = emit_outputs(&out, dir.path(), "demo", Format::Csv).unwrap();
        assert_eq!(std::fs::read_to_string(&csv[0]).unwrap(), "t,p\n0.0,0.142857142857\n");
        let json = emit_outputs(&out, dir.path(), "demo", Format::Json).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&json[0]).unwrap()).unwrap();
        assert_eq!(v["result"]["x"], serde_json::json!(0.333333333333));
        assert_eq!(v["tables"]["series"]["p"][0], serde_json::json!(0.142857142857));
        assert_eq!(v["metrics"]["f"], serde_json::json!(0.25));
    }
}
