//! Buffered CSV tables, written once the command has finished or failed.

use std::path::Path;

use gef_core::field::format_real;

use crate::error::CliError;

pub struct Table {
    pub name: &'static str,
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Default)]
pub struct Outputs {
    tables: Vec<Table>,
}

impl Outputs {
    /// Register a table; rows are appended through the returned index.
    pub fn table(&mut self, name: &'static str, header: &'static [&'static str]) -> usize {
        self.tables.push(Table {
            name,
            header,
            rows: Vec::new(),
        });
        self.tables.len() - 1
    }

    pub fn get(&mut self, idx: usize) -> &mut Table {
        &mut self.tables[idx]
    }

    /// Write every table as `<name>.csv`, or `<name>_partial.csv` after a
    /// failure. Returns the file names written.
    pub fn write(&self, dir: &Path, partial: bool) -> Result<Vec<String>, CliError> {
        let mut names = Vec::new();
        for t in &self.tables {
            let name = format!("{}{}.csv", t.name, if partial { "_partial" } else { "" });
            let path = dir.join(&name);
            let err = |e: csv::Error| CliError::Output {
                path: path.display().to_string(),
                reason: e.to_string(),
            };
            let mut w = csv::Writer::from_path(&path).map_err(err)?;
            w.write_record(t.header).map_err(err)?;
            for row in &t.rows {
                w.write_record(row).map_err(err)?;
            }
            w.flush().map_err(|e| err(e.into()))?;
            names.push(name);
        }
        Ok(names)
    }
}

pub fn real(x: f64) -> String {
    format_real(x)
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
