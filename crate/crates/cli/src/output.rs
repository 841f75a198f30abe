//! CSV emission with a `#` provenance header.

use std::io::Write;

use anyhow::Result;

use crate::config::{ExperimentConfig, HEADER_TAG};

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Header line naming the tool version and subcommand, then the resolved
/// config as commented TOML, then the table.
pub fn write_csv<W: Write>(mut out: W, command: &str, cfg: &ExperimentConfig, table: &Table) -> Result<()> {
    writeln!(out, "{HEADER_TAG}{} {command}", env!("CARGO_PKG_VERSION"))?;
    for line in toml::to_string(cfg)?.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "# {line}")?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
