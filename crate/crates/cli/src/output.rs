//! Deterministic CSV and JSON emission.
//!
//! Rows are written in cell order regardless of how workers finished, floats
//! use Rust's shortest round-trip formatting, and every document embeds the
//! configuration hash, seed, and library version, so identical inputs give
//! byte-identical outputs.

use std::fmt::Write as _;
use std::path::Path;

/// One CSV/JSON cell.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn write_csv(&self, out: &mut String) {
        match self {
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::UInt(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Float(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Text(v) => out.push_str(v),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::UInt(v) => serde_json::Value::from(*v),
            Cell::Float(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Text(v) => serde_json::Value::from(v.clone()),
        }
    }
}

/// A complete experiment result.
#[derive(Clone, Debug)]
pub struct Document {
    pub experiment: &'static str,
    /// key=value header comments, emitted in order
    pub comments: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Optional human-readable summary printed to stdout.
    pub table: Option<String>,
}

impl Document {
    pub fn new(experiment: &'static str, columns: Vec<&'static str>) -> Document {
        Document {
            experiment,
            comments: Vec::new(),
            columns,
            rows: Vec::new(),
            table: None,
        }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) {
        self.comments.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# qcrb v{}", qcrb_core::VERSION);
        let _ = writeln!(out, "# experiment={}", self.experiment);
        for (key, value) in &self.comments {
            let _ = writeln!(out, "# {key}={value}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.write_csv(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn render_json(&self) -> serde_json::Value {
        let mut meta = serde_json::Map::new();
        meta.insert("version".into(), serde_json::Value::from(qcrb_core::VERSION));
        meta.insert("experiment".into(), serde_json::Value::from(self.experiment));
        for (key, value) in &self.comments {
            meta.insert(key.clone(), serde_json::Value::from(value.clone()));
        }
        serde_json::json!({
            "meta": serde_json::Value::Object(meta),
            "columns": self.columns,
            "rows": self.rows.iter().map(|row| {
                row.iter().map(Cell::to_json).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render_csv())
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(&self.render_json())
            .expect("json rendering cannot fail");
        text.push('\n');
        std::fs::write(path, text)
    }
}
