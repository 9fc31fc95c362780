//! Artifacts: a JSON document or a CSV table, both preceded by a header
//! block that echoes the command, its inputs, the tool version and the seed.
//!
//! JSON output is one object whose first key is `header`. CSV output starts
//! with `# key: value` comment lines followed by a column row; numbers are
//! printed in shortest round-trip form.

use std::fs;
use std::io::Write;
use std::path::Path;

use elastica::{Error, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, out: &mut Vec<u8>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Header {
    pub command: &'static str,
    pub seed: u64,
    pub args: Value,
}

impl Header {
    fn to_value(&self) -> Value {
        json!({
            "tool": "elastica",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "seed": self.seed,
            "args": self.args,
        })
    }
}

/// The result of a command in both renderings.
pub struct Artifact {
    pub json: Value,
    pub table: Table,
}

impl Artifact {
    pub fn new<T: Serialize>(payload: &T, table: Table) -> Self {
        Artifact { json: serde_json::to_value(payload).expect("serializable payload"), table }
    }

    pub fn render(&self, header: &Header, format: Format) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        match format {
            Format::Json => {
                let mut obj = Map::new();
                obj.insert("header".into(), header.to_value());
                match &self.json {
                    Value::Object(m) => obj.extend(m.clone()),
                    v => {
                        obj.insert("result".into(), v.clone());
                    }
                }
                serde_json::to_writer_pretty(&mut out, &Value::Object(obj)).map_err(|e| Error::Io(e.to_string()))?;
                out.push(b'\n');
            }
            Format::Csv => {
                writeln!(out, "# tool: elastica {}", env!("CARGO_PKG_VERSION"))?;
                writeln!(out, "# command: {}", header.command)?;
                writeln!(out, "# seed: {}", header.seed)?;
                writeln!(out, "# args: {}", header.args)?;
                self.table.write(&mut out)?;
            }
        }
        Ok(out)
    }
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(bytes)?;
            s.flush()?;
            Ok(())
        }
    }
}
