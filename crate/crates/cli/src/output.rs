//! CSV and JSON emission with a header block.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, Format};

pub const VERSION: &str = concat!("dynperc-", env!("CARGO_PKG_VERSION"));

/// A cell of a result table.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(x) if *x == 0.0 => "0".into(),
            // shortest representation that parses back to the same value
            Cell::Num(x) => x.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(x) => json!(x.to_string()),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Cell {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Cell {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Cell {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Cell {
        Cell::Text(x.to_string())
    }
}

/// Rows under named columns, plus summary values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Report {
        Report { columns: columns.iter().map(|c| c.to_string()).collect(), ..Default::default() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn write<W: Write>(&self, cfg: &ExperimentConfig, w: W) -> std::io::Result<()> {
        match cfg.format {
            Format::Csv => self.write_csv(cfg, w),
            Format::Json => self.write_json(cfg, w),
        }
    }

    fn write_csv<W: Write>(&self, cfg: &ExperimentConfig, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# version = {VERSION}")?;
        for (k, v) in cfg.echo() {
            writeln!(w, "# {k} = {v}")?;
        }
        let mut out = csv::Writer::from_writer(&mut w);
        out.write_record(&self.columns)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::text))?;
        }
        out.flush()?;
        drop(out);
        for (k, v) in &self.summary {
            writeln!(w, "# result {k} = {}", v.text())?;
        }
        Ok(())
    }

    fn write_json<W: Write>(&self, cfg: &ExperimentConfig, mut w: W) -> std::io::Result<()> {
        let config: Map<String, Value> = cfg.echo().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let results: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect()))
            .collect();
        let summary: Map<String, Value> = self.summary.iter().map(|(k, v)| (k.clone(), v.json())).collect();
        let doc = json!({
            "command": cfg.command.name(),
            "config": config,
            "results": results,
            "summary": summary,
            "version": VERSION,
        });
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)
    }
}
