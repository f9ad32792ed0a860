//! CSV readers and writers for streams, matrices, masks, and edge lists.
//!
//! Numbers are written with Rust's shortest round-trip formatting so
//! regeneration with the same config is byte-stable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::synth::CorruptionMask;

/// Matrix as p rows of comma-separated values, row-major.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Stream of t observations (columns of a p x t matrix) as t lines of
/// p comma-separated values.
pub fn write_stream_csv(path: &Path, data: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for col in 0..data.ncols() {
        let row: Vec<String> = (0..data.nrows()).map(|i| data[(i, col)].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Read a stream CSV (one observation per line) into a p x t matrix.
/// The dimension is taken from the first line; every following line must
/// match it and parse as finite floats.
pub fn read_stream_csv(path: &Path) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut values = Vec::new();
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "line {}: cannot parse `{}` as a number",
                    line_no + 1,
                    field.trim()
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "line {}: non-finite value {v}",
                    line_no + 1
                )));
            }
            values.push(v);
        }
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(Error::Data(format!(
                    "line {}: expected {} values, found {}",
                    line_no + 1,
                    first.len(),
                    values.len()
                )));
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: empty stream file", path.display())));
    }
    let p = rows[0].len();
    let t = rows.len();
    Ok(DMatrix::from_fn(p, t, |i, col| rows[col][i]))
}

/// Mask as one `row,col` pair per line.
pub fn write_mask_csv(path: &Path, mask: &CorruptionMask) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "row,col")?;
    for (r, c) in mask.entries() {
        writeln!(w, "{r},{c}")?;
    }
    Ok(())
}

/// Edge list as one `i,j` pair per line, i < j.
pub fn write_edges_csv(path: &Path, edges: &[(usize, usize)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i,j")?;
    for (i, j) in edges {
        writeln!(w, "{i},{j}")?;
    }
    Ok(())
}
