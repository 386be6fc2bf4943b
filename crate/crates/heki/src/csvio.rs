//! Minimal CSV output for numeric tables.
//!
//! All emitted tables are plain numeric columns with short ASCII headers,
//! so no quoting or escaping layer is needed; floats use Rust's shortest
//! round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{AppError, Result};

/// One named numeric column.
#[derive(Debug, Clone)]
pub struct Column {
    /// Header cell.
    pub name: String,
    /// Values, one per row.
    pub values: Vec<f64>,
}

impl Column {
    /// Convenience constructor.
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            values,
        }
    }
}

/// Writes columns as CSV with a header row. All columns must have equal
/// length and headers must be comma-free.
pub fn write_columns(path: &Path, columns: &[Column]) -> Result<()> {
    if columns.is_empty() {
        return Err(AppError::Invalid("no columns to write".into()));
    }
    let rows = columns[0].values.len();
    for c in columns {
        if c.values.len() != rows {
            return Err(AppError::Invalid(format!(
                "column {} has {} rows, expected {rows}",
                c.name,
                c.values.len()
            )));
        }
        if c.name.contains(',') || c.name.contains('\n') {
            return Err(AppError::Invalid(format!("invalid header {:?}", c.name)));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    let headers: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
    writeln!(w, "{}", headers.join(","))?;
    for r in 0..rows {
        for (i, c) in columns.iter().enumerate() {
            if i > 0 {
                write!(w, ",")?;
            }
            write!(w, "{}", c.values[r])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
