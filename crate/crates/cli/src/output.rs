//! Writers for the JSON, CSV and manifest outputs.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// Version of every JSON key set and CSV header emitted here.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(k) => k.to_string(),
            // 17 significant digits survive a round trip through text.
            Cell::Num(x) => format!("{x:.16e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write_to<W: Write>(&self, sink: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush().map_err(|e| CliError::Csv(e.into()))
    }
}

/// One product of a command.
#[derive(Debug, Clone)]
pub enum Product {
    Json(serde_json::Value),
    Csv(Table),
}

fn open(target: &str) -> Result<Box<dyn Write>, CliError> {
    if target == "-" {
        Ok(Box::new(io::stdout().lock()))
    } else {
        let file = File::create(target).map_err(|e| CliError::Io {
            path: target.to_string(),
            source: e,
        })?;
        Ok(Box::new(io::BufWriter::new(file)))
    }
}

pub fn write_product(product: &Product, target: &str) -> Result<(), CliError> {
    let mut sink = open(target)?;
    match product {
        Product::Json(v) => {
            serde_json::to_writer_pretty(&mut sink, v)?;
            writeln!(sink).map_err(|e| CliError::Io {
                path: target.to_string(),
                source: e,
            })?;
        }
        Product::Csv(t) => t.write_to(&mut sink)?,
    }
    sink.flush().map_err(|e| CliError::Io {
        path: target.to_string(),
        source: e,
    })
}

/// Record of one invocation, enough to run it again.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<(), CliError> {
    let target = path.to_string_lossy().into_owned();
    write_product(&Product::Json(serde_json::to_value(manifest)?), &target)
}

/// Adds the schema version to a JSON object.
pub fn versioned(mut value: serde_json::Value) -> serde_json::Value {
    if let Some(obj) = value.as_object_mut() {
        obj.insert("schema_version".into(), SCHEMA_VERSION.into());
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 6.02e23] {
            let text = Cell::Num(x).render();
            assert_eq!(text.parse::<f64>().unwrap(), x, "{text}");
        }
        assert_eq!(Cell::Int(7).render(), "7");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["site", "occupancy"]);
        t.push(vec![Cell::Int(1), Cell::Num(0.6)]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "site,occupancy\n1,5.9999999999999998e-1\n"
        );
    }
}
