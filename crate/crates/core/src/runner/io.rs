//! Matrix interchange format and CSV/JSON writers.
//!
//! A matrix file is one JSON header line followed by `2 rows cols` reals,
//! `re,im` interleaved in row-major order, comma separated with one matrix
//! row per line.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::Complex64;

pub const MATRIX_FORMAT: &str = "complex_re_im_interleaved_row_major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub rows: usize,
    pub cols: usize,
    pub format: String,
}

pub fn format_matrix(m: &ComplexMatrix) -> String {
    let header = MatrixHeader { rows: m.rows(), cols: m.cols(), format: MATRIX_FORMAT.into() };
    let mut out = serde_json::to_string(&header).expect("header");
    out.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).flat_map(|j| [m[(i, j)].re.to_string(), m[(i, j)].im.to_string()]).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let bad = |msg: String| Error::MalformedMatrix(msg);
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let header: MatrixHeader = serde_json::from_str(first).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != MATRIX_FORMAT {
        return Err(bad(format!("unknown format {:?}", header.format)));
    }
    let mut values = Vec::with_capacity(2 * header.rows * header.cols);
    for line in lines {
        for field in line.split(',').map(str::trim).filter(|f| !f.is_empty()) {
            values.push(field.parse::<f64>().map_err(|e| bad(format!("{field:?}: {e}")))?);
        }
    }
    if values.len() != 2 * header.rows * header.cols {
        return Err(bad(format!("expected {} reals, found {}", 2 * header.rows * header.cols, values.len())));
    }
    let data = values.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
    ComplexMatrix::from_row_major(header.rows, header.cols, data)
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::MalformedMatrix(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    Ok(std::fs::write(path, format_matrix(m))?)
}

/// CSV with a `# config_hash=...` comment line, a header row and `f64` cells
/// printed in shortest round-trip form.
pub fn format_csv(config_hash: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = format!("# config_hash={config_hash}\n{}\n", columns.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn write_csv(path: &Path, config_hash: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    Ok(std::fs::write(path, format_csv(config_hash, columns, rows))?)
}

pub fn write_eigenvalues(path: &Path, config_hash: &str, eigs: &[Complex64]) -> Result<()> {
    write_csv(path, config_hash, &["re", "im"], eigs.iter().map(|z| vec![z.re, z.im]))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(value)?)?)
}
