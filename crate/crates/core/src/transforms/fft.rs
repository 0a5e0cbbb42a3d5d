//! Unitary discrete Fourier transforms.
//!
//! 2D spectra are kept in standard FFT order (zero frequency at index `(0, 0)`).
//! [`centered_index`] and [`fft_bin`] translate to and from the symmetric
//! index range `{-n/2+1, ..., n/2}` used by the 1D routines, which store
//! their spectra in centered order natively.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::types::{Image, Signal1D};

/// Planned unitary 2D transform for `n x n` images.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.apply(&self.forward, data);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.apply(&self.inverse, data);
    }

    fn apply(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        // rows
        plan.process(data);
        // columns through a transpose
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        transpose(data, &mut t, n);
        plan.process(&mut t);
        transpose(&t, data, n);
        let scale = 1.0 / n as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

/// Unitary 2D DFT: `X[k, l] = (1/n) sum_{i,j} x[i, j] exp(-2 pi i (k i + l j) / n)`.
pub fn dft2(img: &Image) -> Image {
    let mut data = img.data().to_vec();
    Fft2::new(img.n()).forward_in_place(&mut data);
    Image::from_vec(img.n(), data).expect("length preserved")
}

/// Inverse of [`dft2`].
pub fn idft2(spectrum: &Image) -> Image {
    let mut data = spectrum.data().to_vec();
    Fft2::new(spectrum.n()).inverse_in_place(&mut data);
    Image::from_vec(spectrum.n(), data).expect("length preserved")
}

/// Centered frequency of FFT bin `bin`: bins above `n/2` wrap to negative values.
#[inline]
pub fn centered_index(bin: usize, n: usize) -> isize {
    if bin > n / 2 {
        bin as isize - n as isize
    } else {
        bin as isize
    }
}

/// FFT bin of the centered frequency `k`.
#[inline]
pub fn fft_bin(k: isize, n: usize) -> usize {
    k.rem_euclid(n as isize) as usize
}

/// Planned unitary 1D transform in FFT order.
#[derive(Clone)]
pub struct Fft1 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.forward.process(data);
        data.iter_mut().for_each(|v| *v *= self.scale);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        data.iter_mut().for_each(|v| *v *= self.scale);
    }
}

/// Position of centered frequency `k` inside a centered 1D spectrum.
#[inline]
pub fn centered_position(k: isize, n: usize) -> usize {
    (k + n as isize / 2 - 1) as usize
}

/// Unitary 1D DFT with `1/sqrt(n)` normalization.
///
/// The result is in centered order: entry `p` holds frequency `k = p - n/2 + 1`,
/// so the output runs over `k = -n/2+1, ..., n/2`.
pub fn dft1(sig: &Signal1D) -> Result<Signal1D> {
    let n = sig.n();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "1D transform length must be even and positive, got {n}"
        )));
    }
    let mut buf = sig.data().to_vec();
    Fft1::new(n).forward_in_place(&mut buf);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (bin, v) in buf.into_iter().enumerate() {
        out[centered_position(centered_index(bin, n), n)] = v;
    }
    Ok(Signal1D::new(out))
}

/// Inverse of [`dft1`]; takes a centered spectrum.
pub fn idft1(spectrum: &Signal1D) -> Result<Signal1D> {
    let n = spectrum.n();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "1D transform length must be even and positive, got {n}"
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (p, v) in spectrum.data().iter().enumerate() {
        let k = p as isize - n as isize / 2 + 1;
        buf[fft_bin(k, n)] = *v;
    }
    Fft1::new(n).inverse_in_place(&mut buf);
    Ok(Signal1D::new(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_image(n: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Image::from_vec(n, data).unwrap()
    }

    // O(n^4) double sum with unitary scaling
    fn direct_dft2(img: &Image) -> Vec<Complex64> {
        let n = img.n();
        let mut out = vec![c(0.0, 0.0); n * n];
        for k in 0..n {
            for l in 0..n {
                let mut acc = c(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        let phase = -2.0 * PI * ((k * i + l * j) % n) as f64 / n as f64;
                        acc += img.get(i, j) * Complex64::from_polar(1.0, phase);
                    }
                }
                out[k * n + l] = acc / n as f64;
            }
        }
        out
    }

    #[test]
    fn constant_image_is_pure_dc() {
        let value = c(0.7, -0.2);
        let spec = dft2(&Image::constant(4, value));
        assert!((spec.get(0, 0) - value * 4.0).norm() < 1e-14);
        for (k, v) in spec.data().iter().enumerate().skip(1) {
            assert!(v.norm() < 1e-14, "bin {k} = {v}");
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut img = Image::zeros(8);
        img.set(0, 0, c(1.0, 0.0));
        let spec = dft2(&img);
        for v in spec.data() {
            assert!((v - c(0.125, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn matches_direct_sum_and_preserves_norm() {
        let img = random_image(16, 3);
        let spec = dft2(&img);
        let oracle = direct_dft2(&img);
        for (a, b) in spec.data().iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
        let rel = (spec.norm2() - img.norm2()).abs() / img.norm2();
        assert!(rel < 1e-12, "relative norm change {rel}");
        let back = idft2(&spec);
        let err = back.sub(&img).unwrap().norm2() / img.norm2();
        assert!(err < 1e-12);
    }

    #[test]
    fn dft1_spike_and_constant() {
        let n = 16;
        let spec = dft1(&Signal1D::spike(n)).unwrap();
        for v in spec.data() {
            assert!((v - c(1.0 / 4.0, 0.0)).norm() < 1e-15);
        }
        let spec = dft1(&Signal1D::from_real(&vec![1.0; n])).unwrap();
        for (p, v) in spec.data().iter().enumerate() {
            let expected = if p == centered_position(0, n) { 4.0 } else { 0.0 };
            assert!((v - c(expected, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn dft1_matches_direct_sum() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z: Vec<Complex64> = (0..n)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let spec = dft1(&Signal1D::new(z.clone())).unwrap();
        for k in -(n as isize) / 2 + 1..=n as isize / 2 {
            let mut acc = c(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                acc += zj * Complex64::from_polar(1.0, -2.0 * PI * (k * j as isize) as f64 / n as f64);
            }
            acc /= (n as f64).sqrt();
            assert!((spec.data()[centered_position(k, n)] - acc).norm() < 1e-12);
        }
        let back = idft1(&spec).unwrap();
        assert!(back.sub(&Signal1D::new(z)).unwrap().norm2() < 1e-12);
    }

    #[test]
    fn dft1_rejects_odd_length() {
        assert!(matches!(
            dft1(&Signal1D::zeros(7)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn index_conversions_round_trip() {
        for n in [2usize, 7, 8] {
            for bin in 0..n {
                assert_eq!(fft_bin(centered_index(bin, n), n), bin);
            }
        }
        assert_eq!(centered_index(4, 8), 4);
        assert_eq!(centered_index(5, 8), -3);
    }
}
