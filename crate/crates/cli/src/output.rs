//! Tables with provenance headers, written atomically as CSV or JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything needed to rerun the experiment that produced a file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    /// Every parameter the command used, defaults included.
    pub parameters: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, parameters: BTreeMap<String, String>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(format!("command={command}\n"));
        for (k, v) in &parameters {
            hasher.update(format!("{k}={v}\n"));
        }
        let digest = hasher.finalize();
        Provenance {
            tool: "yp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed: None,
            parameters,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Provenance { seed: Some(seed), ..self.clone() }
    }

    fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("{} {}", self.tool, self.version),
            format!("command: {}", self.command),
            format!("config_sha256: {}", self.config_sha256),
        ];
        if let Some(s) = self.seed {
            lines.push(format!("seed: {s}"));
        }
        lines.extend(self.parameters.iter().map(|(k, v)| format!("param {k} = {v}")));
        lines
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:?}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Column name and its unit or definition.
pub type Column = (String, String);

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Table::with_columns(columns.iter().map(|(n, d)| (n.to_string(), d.to_string())).collect())
    }

    pub fn with_columns(columns: Vec<Column>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, prov: &Provenance, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => self.render_csv(prov),
            Format::Json => {
                let doc = json!({
                    "provenance": prov,
                    "columns": self.columns.iter().map(|(n, d)| json!({"name": n, "definition": d})).collect::<Vec<_>>(),
                    "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                });
                let mut out = serde_json::to_vec_pretty(&doc)?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }

    fn render_csv(&self, prov: &Provenance) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for line in prov.comment_lines() {
            writeln!(out, "# {line}")?;
        }
        for (name, def) in &self.columns {
            writeln!(out, "# column {name}: {def}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.0.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
    }
}

/// JSON document with a `provenance` block added to the top-level object.
pub fn render_json_doc(prov: &Provenance, body: Value) -> Result<Vec<u8>> {
    let mut doc = serde_json::Map::new();
    doc.insert("provenance".into(), serde_json::to_value(prov)?);
    if let Value::Object(fields) = body {
        doc.extend(fields);
    } else {
        doc.insert("result".into(), body);
    }
    let mut out = serde_json::to_vec_pretty(&Value::Object(doc))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let target = dir.join(name);
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target).with_context(|| format!("renaming onto {}", target.display()))?;
    log::info!("wrote {}", target.display());
    Ok(target)
}
