//! Matrix files.
//!
//! Binary layout: `b"OSEM"`, version byte `1`, `u32` LE rows, `u32` LE cols,
//! then `rows * cols` little-endian `f64` values in row-major order.
//! CSV is header-free, comma-separated, one matrix row per line.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"OSEM";
pub const MATRIX_VERSION: u8 = 1;

pub fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Format("row count exceeds u32".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Format("column count exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(13 + 8 * m.as_slice().len());
    buf.extend_from_slice(MATRIX_MAGIC);
    buf.push(MATRIX_VERSION);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<Matrix> {
    let mut header = [0u8; 13];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated matrix header: {e}")))?;
    if &header[..4] != MATRIX_MAGIC {
        return Err(Error::Format("bad matrix magic".into()));
    }
    if header[4] != MATRIX_VERSION {
        return Err(Error::Format(format!("unsupported matrix version {}", header[4])));
    }
    let rows = u32::from_le_bytes(header[5..9].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[9..13].try_into().unwrap()) as usize;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
    let mut raw = vec![0u8; len * 8];
    r.read_exact(&mut raw)
        .map_err(|e| Error::Format(format!("truncated matrix payload: {e}")))?;
    let data = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let bytes = fs::read(path)?;
    let mut slice = bytes.as_slice();
    let m = read_matrix(&mut slice)?;
    if !slice.is_empty() {
        return Err(Error::Format("trailing bytes after matrix".into()));
    }
    Ok(m)
}

/// Shortest round-trippable decimal form of every entry.
pub fn to_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn from_csv(text: &str) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(&rows).map_err(|_| Error::Format("ragged CSV rows".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_header_layout() {
        let m = Matrix::from_rows(&[[1.0, -2.5]]).unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(&buf[..5], b"OSEM\x01");
        assert_eq!(&buf[5..13], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&buf[13..21], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 13 + 16);
        assert_eq!(read_matrix(&mut buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let mut buf = Vec::new();
        write_matrix(&mut buf, &Matrix::identity(2)).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_matrix(&mut bad.as_slice()), Err(Error::Format(_))));
        let short = &buf[..buf.len() - 1];
        assert!(matches!(read_matrix(&mut &short[..]), Err(Error::Format(_))));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = Matrix::from_rows(&[[0.1, 1.0 / 3.0], [-1e-300, 7.0]]).unwrap();
        let text = to_csv(&m);
        assert_eq!(from_csv(&text).unwrap(), m);
        assert!(from_csv("1,2\n3\n").is_err());
    }
}
