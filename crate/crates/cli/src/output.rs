use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use schurtomo::tensor::CMatrix;

use crate::CliError;

/// One CSV field.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        x.to_string()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Header plus rows with RFC-4180 quoting.
pub fn emit_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Output("refusing to write a CSV with no rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != header.len()) {
        return Err(CliError::Output(format!("row has {} fields, header has {}", r.len(), header.len())));
    }
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r.iter().map(Cell::render))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<(), CliError> {
    let f = File::create(path)?;
    emit_csv(BufWriter::new(f), header, rows)
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// Complex matrix as separate real and imaginary row lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&schurtomo::tensor::C64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self {
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        let n = self.re.len();
        if n == 0 || self.re.iter().any(|r| r.len() != n) {
            return Err(CliError::Config("matrix must be square and nonempty".into()));
        }
        if !self.im.is_empty() && (self.im.len() != n || self.im.iter().any(|r| r.len() != n)) {
            return Err(CliError::Config("imaginary part has the wrong shape".into()));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = if self.im.is_empty() { 0.0 } else { self.im[i][j] };
            schurtomo::tensor::C64::new(self.re[i][j], im)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_twelve_digits() {
        assert_eq!(format_float(0.1), "1.00000000000e-1");
        assert_eq!(format_float(-12345.678), "-1.23456780000e4");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn empty_rows_rejected() {
        assert!(emit_csv(Vec::new(), &["a"], &[]).is_err());
        assert!(emit_csv(Vec::new(), &["a"], &[vec![Cell::Int(1), Cell::Int(2)]]).is_err());
    }
}
