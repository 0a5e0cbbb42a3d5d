//! Value types shared by every stage of the pipeline.

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

/// Square complex image stored row-major, `data[i * n + j]` is row `i`, column `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    n: usize,
    data: Vec<Complex64>,
}

impl Image {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("image side length must be positive".into()));
        }
        check_dim("image data", n * n, data.len())?;
        Ok(Self { n, data })
    }

    pub fn from_real(n: usize, values: &[f64]) -> Result<Self> {
        Self::from_vec(n, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn constant(n: usize, value: Complex64) -> Self {
        Self {
            n,
            data: vec![value; n * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.n + col] = value;
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    /// Largest entrywise modulus.
    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).sum()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.norm()).collect()
    }

    /// Row-major position (0-based) of the entry with the largest modulus.
    pub fn argmax_modulus(&self) -> (usize, usize) {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (k, v) in self.data.iter().enumerate() {
            let m = v.norm();
            if m > best_val {
                best_val = m;
                best = k;
            }
        }
        (best / self.n, best % self.n)
    }

    pub fn sub(&self, other: &Image) -> Result<Image> {
        check_dim("image side", self.n, other.n)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Image { n: self.n, data })
    }

    pub fn add(&self, other: &Image) -> Result<Image> {
        check_dim("image side", self.n, other.n)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Image { n: self.n, data })
    }

    pub fn scale(&self, factor: Complex64) -> Image {
        Image {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Entrywise product with a real weight image (only real parts of `weight` are used).
    pub fn weighted(&self, weight: &Image) -> Result<Image> {
        check_dim("image side", self.n, weight.n)?;
        let data = self.data.iter().zip(&weight.data).map(|(v, w)| v * w.re).collect();
        Ok(Image { n: self.n, data })
    }

    /// True when every entry is real and lies in `[0, 1]`.
    pub fn is_real_unit_range(&self) -> bool {
        self.data
            .iter()
            .all(|v| v.im == 0.0 && (0.0..=1.0).contains(&v.re))
    }
}

/// Measurement vector ordered by the canonical order of its sampling mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector {
    data: Vec<Complex64>,
}

impl MeasurementVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn zeros(m: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); m])
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn add(&self, other: &MeasurementVector) -> Result<MeasurementVector> {
        check_dim("measurement length", self.m(), other.m())?;
        Ok(Self::new(
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, factor: Complex64) -> MeasurementVector {
        Self::new(self.data.iter().map(|v| v * factor).collect())
    }

    /// Real inner product `Re <self, other>`.
    pub fn real_dot(&self, other: &MeasurementVector) -> f64 {
        real_dot(&self.data, &other.data)
    }
}

/// One-dimensional complex signal of length `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal1D {
    data: Vec<Complex64>,
}

impl Signal1D {
    pub fn new(data: Vec<Complex64>) -> Self {
        Self { data }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::new(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// The unit spike at index 0.
    pub fn spike(n: usize) -> Self {
        let mut s = Self::zeros(n);
        s.data[0] = Complex64::new(1.0, 0.0);
        s
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn norm1(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).sum()
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn sub(&self, other: &Signal1D) -> Result<Signal1D> {
        check_dim("signal length", self.n(), other.n())?;
        Ok(Self::new(
            self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &Signal1D) -> Result<Signal1D> {
        check_dim("signal length", self.n(), other.n())?;
        Ok(Self::new(
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, factor: Complex64) -> Signal1D {
        Self::new(self.data.iter().map(|v| v * factor).collect())
    }

    /// Number of entries with modulus above `tol`.
    pub fn count_nonzero(&self, tol: f64) -> usize {
        self.data.iter().filter(|v| v.norm() > tol).count()
    }
}

pub(crate) fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub(crate) fn real_dot(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
