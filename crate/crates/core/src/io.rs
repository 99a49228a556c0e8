//! Matrix serialization.
//!
//! The binary layout is the 4-byte magic `MPJS`, a little-endian `u16`
//! version, a `u8` element type (0 for binary64), `u64` rows and `u64` cols,
//! then the entries in column-major order as little-endian binary64.
//! Small matrices can also be exchanged as comma-separated text, one row per line.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAGIC: [u8; 4] = *b"MPJS";
pub const VERSION: u16 = 1;
pub const DTYPE_F64: u8 = 0;
pub const HEADER_LEN: usize = 23;
pub const CSV_MAX_DIM: usize = 64;

pub fn to_bytes(a: &Matrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * a.as_slice().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(DTYPE_F64);
    out.extend_from_slice(&(a.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(a.cols() as u64).to_le_bytes());
    for v in a.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::Format(format!(
                "truncated at byte offset {}: expected {len} bytes of {what}, found {}",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Matrix<f64>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::Format("bad magic at byte offset 0: expected \"MPJS\"".into()));
    }
    let version = u16::from_le_bytes(cur.take(2, "version")?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version} at byte offset 4")));
    }
    let dtype = cur.take(1, "dtype")?[0];
    if dtype != DTYPE_F64 {
        return Err(Error::Format(format!("unsupported dtype {dtype} at byte offset 6")));
    }
    let rows = cur.u64("row count")?;
    let cols = cur.u64("column count")?;
    let count = rows
        .checked_mul(cols)
        .and_then(|c| usize::try_from(c).ok())
        .filter(|c| c.checked_mul(8).is_some())
        .ok_or_else(|| Error::Format(format!("dimensions {rows}x{cols} overflow")))?;
    let body = cur.take(8 * count, "matrix data")?;
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after offset {}",
            bytes.len() - cur.pos,
            cur.pos
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_col_major(rows as usize, cols as usize, data)
}

pub fn write_matrix<W: Write>(mut w: W, a: &Matrix<f64>) -> Result<()> {
    w.write_all(&to_bytes(a))?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<Matrix<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

fn check_csv_size(rows: usize, cols: usize) -> Result<()> {
    if rows > CSV_MAX_DIM || cols > CSV_MAX_DIM {
        return Err(Error::Format(format!(
            "{rows}x{cols} exceeds the {CSV_MAX_DIM}x{CSV_MAX_DIM} text format limit"
        )));
    }
    Ok(())
}

/// Exact round trip: every entry is written in shortest scientific form.
pub fn to_csv(a: &Matrix<f64>) -> Result<String> {
    check_csv_size(a.rows(), a.cols())?;
    let mut s = String::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{:e}", a[(i, j)]).unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn from_csv(text: &str) -> Result<Matrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}: {f:?}", line_no + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    check_csv_size(rows.len(), rows.first().map_or(0, Vec::len))?;
    Matrix::from_rows(&rows)
}
