//! Binary complex-matrix dumps ("TBSM").
//!
//! Layout, little-endian: the four bytes `TBSM`, `u32` version, `u32` rows,
//! `u32` cols, then `rows * cols` pairs of `f64` (real, imaginary) in
//! row-major order.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Scalar;
use num_complex::Complex;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"TBSM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode<T: Scalar>(m: &CMatrix<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.extend_from_slice(&z.re.as_f64().to_le_bytes());
            out.extend_from_slice(&z.im.as_f64().to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<CMatrix<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Dump(format!("file too short for header: {} bytes", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Dump("bad magic, expected TBSM".into()));
    }
    let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Dump(format!("unsupported version {version}")));
    }
    let (rows, cols) = (word(8) as usize, word(12) as usize);
    let expected = HEADER_LEN + 16 * rows * cols;
    if bytes.len() != expected {
        return Err(Error::Dump(format!(
            "{rows}x{cols} payload needs {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let value = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let k = HEADER_LEN + 16 * (i * cols + j);
        Complex::new(value(k), value(k + 8))
    }))
}

pub fn write<T: Scalar>(m: &CMatrix<T>, mut w: impl Write) -> Result<()> {
    w.write_all(&encode(m))?;
    Ok(())
}

pub fn read(mut r: impl Read) -> Result<CMatrix<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_file<T: Scalar>(m: &CMatrix<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(m))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<CMatrix<f64>> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let bytes = encode(&m);
        assert_eq!(&bytes[0..4], b"TBSM");
        assert_eq!(bytes[4..8], [1, 0, 0, 0]);
        assert_eq!(bytes[8..12], [2, 0, 0, 0]);
        assert_eq!(bytes[12..16], [3, 0, 0, 0]);
        assert_eq!(bytes.len(), 16 + 6 * 16);
        // row-major: second entry is (0, 1)
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.0);
        assert_eq!(f64::from_le_bytes(bytes[40..48].try_into().unwrap()), 1.0);
    }

    #[test]
    fn rejects_malformed() {
        let m = CMatrix::from_element(2, 2, c(1.0f64, 2.0));
        let mut bytes = encode(&m);
        assert!(decode(&bytes[..10]).is_err());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::Dump(_))));
        let mut bytes = encode(&m);
        bytes[4] = 2;
        assert!(decode(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let m = CMatrix::from_fn(rows, cols, |i, j| {
                let x = (seed ^ (i as u64 * 31 + j as u64 * 17)) as f64;
                c(x.sin() * 1e3, (x * 0.37).cos() * 1e-300)
            });
            let back = decode(&encode(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
