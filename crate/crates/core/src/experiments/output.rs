//! Tabular results and their CSV/JSON encodings.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::experiments::config::Format;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(usize),
    Num(f64),
    Text(String),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            // shortest representation that round-trips
            Cell::Num(x) => write!(f, "{x:?}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(title: &str, columns: Vec<String>) -> Self {
        Self { title: title.to_string(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Writes the table preceded by a `#` comment line holding `stamp`.
    pub fn write<W: Write>(&self, mut out: W, format: Format, stamp: &str) -> Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "# {} generated {stamp}", self.title)?;
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|c| c.to_string()))?;
                }
                w.flush()?;
            }
            Format::Json => {
                #[derive(Serialize)]
                struct Doc<'a> {
                    generated: &'a str,
                    #[serde(flatten)]
                    table: &'a Table,
                }
                serde_json::to_writer_pretty(&mut out, &Doc { generated: stamp, table: self })?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}
