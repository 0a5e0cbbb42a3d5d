//! Complex float image files.
//!
//! Layout: the magic bytes `CFI1`, rows and cols as little-endian `u32`, then
//! `rows * cols` row-major pairs of little-endian `f32` (re, im).

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::SamplingMask;
use crate::types::{Image, MeasurementVector};

const MAGIC: &[u8; 4] = b"CFI1";
const HEADER: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct CfiArray {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CfiArray {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Format(format!("{rows}x{cols} array with {} entries", data.len())));
        }
        if u32::try_from(rows).is_err() || u32::try_from(cols).is_err() {
            return Err(Error::Format("array dimensions exceed u32".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Values are stored in single precision.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&(v.re as f32).to_le_bytes());
            out.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing CFI1 header".into()));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let rows = word(4);
        let cols = word(8);
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("CFI dimensions overflow".into()))?;
        if bytes.len() != HEADER + 8 * count {
            return Err(Error::Format(format!(
                "CFI body has {} bytes, expected {} for {rows}x{cols}",
                bytes.len() - HEADER,
                8 * count
            )));
        }
        let float = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64;
        let data = (0..count)
            .map(|i| {
                let at = HEADER + 8 * i;
                Complex64::new(float(at), float(at + 4))
            })
            .collect();
        Ok(Self { rows, cols, data })
    }
}

pub fn write_cfi(path: &Path, array: &CfiArray) -> Result<()> {
    fs::write(path, array.to_bytes())?;
    Ok(())
}

pub fn read_cfi(path: &Path) -> Result<CfiArray> {
    CfiArray::from_bytes(&fs::read(path)?)
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    write_cfi(path, &CfiArray::new(img.n(), img.n(), img.data().to_vec())?)
}

pub fn read_image(path: &Path) -> Result<Image> {
    let a = read_cfi(path)?;
    if a.rows != a.cols {
        return Err(Error::Format(format!("image must be square, got {}x{}", a.rows, a.cols)));
    }
    Image::from_vec(a.rows, a.data)
}

/// Stored as a `1 x m` array in canonical mask order.
pub fn write_measurements(path: &Path, y: &MeasurementVector) -> Result<()> {
    write_cfi(path, &CfiArray::new(1, y.m(), y.data().to_vec())?)
}

pub fn read_measurements(path: &Path) -> Result<MeasurementVector> {
    let a = read_cfi(path)?;
    if a.rows != 1 {
        return Err(Error::Format(format!("measurements must have one row, got {}", a.rows)));
    }
    Ok(MeasurementVector::new(a.data))
}

/// Stored as an `n x n` bitmap with real parts 0 or 1, indexed by FFT bin.
pub fn write_mask(path: &Path, mask: &SamplingMask) -> Result<()> {
    let n = mask.n();
    let data = mask
        .retained()
        .iter()
        .map(|&keep| Complex64::new(if keep { 1.0 } else { 0.0 }, 0.0))
        .collect();
    write_cfi(path, &CfiArray::new(n, n, data)?)
}

pub fn read_mask(path: &Path) -> Result<SamplingMask> {
    let a = read_cfi(path)?;
    if a.rows != a.cols {
        return Err(Error::Format(format!("mask must be square, got {}x{}", a.rows, a.cols)));
    }
    let mut bits = Vec::with_capacity(a.data.len());
    for v in &a.data {
        if v.im != 0.0 || (v.re != 0.0 && v.re != 1.0) {
            return Err(Error::Format(format!("mask entries must be 0 or 1, found {v}")));
        }
        bits.push(v.re == 1.0);
    }
    SamplingMask::from_bitmap(a.rows, bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let a = CfiArray::new(1, 2, vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.0)]).unwrap();
        let b = a.to_bytes();
        assert_eq!(&b[..4], b"CFI1");
        assert_eq!(&b[4..12], &[1, 0, 0, 0, 2, 0, 0, 0]);
        assert_eq!(&b[12..16], &1.0f32.to_le_bytes());
        assert_eq!(&b[16..20], &(-2.0f32).to_le_bytes());
        assert_eq!(b.len(), 28);
        assert_eq!(CfiArray::from_bytes(&b).unwrap(), a);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(CfiArray::from_bytes(b"CFI2\0\0\0\0\0\0\0\0").is_err());
        let mut b = CfiArray::new(2, 2, vec![Complex64::new(0.0, 0.0); 4]).unwrap().to_bytes();
        b.pop();
        assert!(CfiArray::from_bytes(&b).is_err());
        assert!(CfiArray::new(2, 3, vec![]).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mask.cfi");
        let mask = SamplingMask::radial(32, 7).unwrap();
        write_mask(&p, &mask).unwrap();
        assert_eq!(read_mask(&p).unwrap(), mask);
    }
}
