//! Delimited-text tables.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// A header row and data rows, all cells already formatted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn write_to<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting; empty for missing or non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Where a table goes: a file, or stdout when no path is given.
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    pub fn new(path: Option<&Path>) -> Self {
        match path {
            Some(p) => Self::File(p.to_path_buf()),
            None => Self::Stdout,
        }
    }

    /// Writes the whole table. A file that cannot be completed is removed.
    pub fn write(&self, table: &Table) -> Result<()> {
        match self {
            Self::Stdout => table
                .write_to(io::stdout().lock())
                .map_err(|e| CliError::io("<stdout>", e.into())),
            Self::File(path) => {
                let result = File::create(path)
                    .map_err(csv::Error::from)
                    .and_then(|f| table.write_to(f));
                result.map_err(|e| {
                    let _ = std::fs::remove_file(path);
                    CliError::io(path, e.into())
                })
            }
        }
    }
}
