//! Numeric CSV tables with a header row.

use std::fs;
use std::path::Path;

use antac_core::Matrix;

use crate::error::{CliError, CliResult};

/// Text form of a float that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), fmt_f64)
}

fn is_missing(field: &str) -> bool {
    matches!(
        field.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "none" | "-nan"
    )
}

/// Parse one numeric field, naming its position (1-based) on failure.
pub fn parse_value(field: &str, row: usize, column: &str, path: &Path) -> CliResult<f64> {
    let field = field.trim();
    if is_missing(field) {
        return Err(CliError::input(format!(
            "{}: missing value at data row {row}, column '{column}'",
            path.display()
        )));
    }
    let v: f64 = field.parse().map_err(|_| {
        CliError::input(format!(
            "{}: cannot parse '{field}' at data row {row}, column '{column}'",
            path.display()
        ))
    })?;
    if !v.is_finite() {
        return Err(CliError::input(format!(
            "{}: non-finite value '{field}' at data row {row}, column '{column}'",
            path.display()
        )));
    }
    Ok(v)
}

/// A table of named columns read in full.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Table { header, rows })
    }

    pub fn column_index(&self, name: &str, path: &Path) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::input(format!("{}: no column named '{name}'", path.display())))
    }
}

/// A numeric matrix with column names.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub names: Vec<String>,
    pub matrix: Matrix,
}

/// Read a numeric matrix. A file whose header line is empty holds zero
/// columns; its row count is then unknown and reported as `None`.
pub fn read_matrix(path: &Path) -> CliResult<(Vec<String>, Option<Matrix>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.lines().next().is_none_or(|l| l.trim().is_empty()) {
        return Ok((Vec::new(), None));
    }
    let table = Table::read(path)?;
    let cols = table.header.len();
    let mut data = Vec::with_capacity(table.rows.len() * cols);
    for (r, row) in table.rows.iter().enumerate() {
        for (c, field) in row.iter().enumerate() {
            data.push(parse_value(field, r + 1, &table.header[c], path)?);
        }
    }
    let m = Matrix::from_vec(table.rows.len(), cols, data)?;
    Ok((table.header, Some(m)))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_matrix(path: &Path, names: &[String], m: &Matrix) -> CliResult<()> {
    let mut out = names.join(",");
    out.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Default column names `prefix1, prefix2, ...`.
pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|k| format!("{prefix}{k}")).collect()
}

/// Rows of already-formatted fields under a header.
pub fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
