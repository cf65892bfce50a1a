//! Tabular command output with a provenance header.
//!
//! Reals are written with 17 significant digits so reruns compare byte for
//! byte.

use serde::Serialize;
use serde_json::{json, Value};

use super::config::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

/// Everything needed to rerun a command and reproduce its output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub command: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub samples: usize,
    pub blocklength: usize,
    pub packet_size_bits: f64,
    pub tolerances: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new(), diagnostics: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn render(&self, provenance: &Provenance, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.csv(provenance),
            OutputFormat::Json => self.json(provenance),
        }
    }

    fn csv(&self, p: &Provenance) -> String {
        let mut out = String::new();
        out.push_str(&format!("# fbqos {}\n", p.version));
        out.push_str(&format!("# command: {}\n", p.command));
        out.push_str(&format!("# config_sha256: {}\n", p.config_sha256));
        out.push_str(&format!("# seed: {}\n", p.seed));
        out.push_str(&format!("# samples: {}\n", p.samples));
        out.push_str(&format!("# blocklength: {}\n", p.blocklength));
        out.push_str(&format!("# packet_size_bits: {:.16e}\n", p.packet_size_bits));
        for (name, v) in &p.tolerances {
            out.push_str(&format!("# tolerance.{name}: {v:.16e}\n"));
        }
        for d in &self.diagnostics {
            out.push_str(&format!("# diagnostic: {d}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn json(&self, p: &Provenance) -> String {
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({
            "provenance": p,
            "diagnostics": self.diagnostics,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}
