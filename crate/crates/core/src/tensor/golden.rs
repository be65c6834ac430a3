use std::io::{Read, Write};

use super::{CMatrix, C64};
use crate::error::{domain, Result};

/// Leading bytes of every golden matrix file.
pub const GOLDEN_MAGIC: &[u8; 8] = b"SCHURMAT";

/// Writes `m` as: magic, rows (u64 LE), cols (u64 LE), then row-major
/// `(re, im)` pairs of little-endian `f64`.
pub fn write_matrix<W: Write>(mut w: W, m: &CMatrix) -> Result<()> {
    w.write_all(GOLDEN_MAGIC)?;
    w.write_all(&(m.nrows() as u64).to_le_bytes())?;
    w.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<CMatrix> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != GOLDEN_MAGIC {
        return domain("not a golden matrix file (bad magic)");
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let cols = u64::from_le_bytes(word) as usize;
    if rows.checked_mul(cols).map_or(true, |n| n > 1 << 26) {
        return domain(format!("implausible golden matrix shape {rows}x{cols}"));
    }
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}
