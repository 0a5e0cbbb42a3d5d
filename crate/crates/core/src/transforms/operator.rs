//! Subsampled Fourier forward operator and its pseudoinverse (zero filling).

use num_complex::Complex64;

use crate::error::{check_dim, Result};
use crate::transforms::fft::{Fft1, Fft2};
use crate::transforms::mask::{Mask1D, SamplingMask};
use crate::types::{Image, MeasurementVector, Signal1D};

/// `A = P_mask F` with a cached FFT plan.
#[derive(Clone)]
pub struct SubsampledFourier {
    mask: SamplingMask,
    fft: Fft2,
}

impl SubsampledFourier {
    pub fn new(mask: &SamplingMask) -> Self {
        Self {
            mask: mask.clone(),
            fft: Fft2::new(mask.n()),
        }
    }

    pub fn mask(&self) -> &SamplingMask {
        &self.mask
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn forward(&self, img: &Image) -> Result<MeasurementVector> {
        check_dim("image side vs mask side", self.mask.n(), img.n())?;
        let mut spec = img.data().to_vec();
        self.fft.forward_in_place(&mut spec);
        Ok(self.gather(&spec))
    }

    pub fn pseudoinverse(&self, y: &MeasurementVector) -> Result<Image> {
        check_dim("measurement length vs mask size", self.mask.m(), y.m())?;
        let mut spec = self.embed(y.data());
        self.fft.inverse_in_place(&mut spec);
        Image::from_vec(self.mask.n(), spec)
    }

    /// Picks the retained entries of an FFT-order spectrum.
    pub fn gather(&self, spectrum: &[Complex64]) -> MeasurementVector {
        MeasurementVector::new(self.mask.order().iter().map(|&k| spectrum[k]).collect())
    }

    /// Zero-filled FFT-order spectrum holding `values` on the mask.
    pub fn embed(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.mask.n();
        let mut spec = vec![Complex64::new(0.0, 0.0); n * n];
        for (&k, &v) in self.mask.order().iter().zip(values) {
            spec[k] = v;
        }
        spec
    }
}

/// `A x = P_mask(F x)` in canonical mask order.
pub fn forward(img: &Image, mask: &SamplingMask) -> Result<MeasurementVector> {
    SubsampledFourier::new(mask).forward(img)
}

/// `A^dagger y = F^{-1}(P_mask^* y)`.
pub fn pseudoinverse(y: &MeasurementVector, mask: &SamplingMask) -> Result<Image> {
    SubsampledFourier::new(mask).pseudoinverse(y)
}

/// 1D counterpart `A_n = P_mask F_n`, measurements ordered by ascending frequency.
#[derive(Clone)]
pub struct SubsampledFourier1D {
    mask: Mask1D,
    bins: Vec<usize>,
    fft: Fft1,
}

impl SubsampledFourier1D {
    pub fn new(mask: &Mask1D) -> Self {
        Self {
            mask: mask.clone(),
            bins: mask.fft_bins(),
            fft: Fft1::new(mask.n()),
        }
    }

    pub fn mask(&self) -> &Mask1D {
        &self.mask
    }

    pub fn forward(&self, sig: &Signal1D) -> Result<MeasurementVector> {
        check_dim("signal length vs mask length", self.mask.n(), sig.n())?;
        let mut buf = sig.data().to_vec();
        self.fft.forward_in_place(&mut buf);
        Ok(MeasurementVector::new(self.bins.iter().map(|&b| buf[b]).collect()))
    }

    pub fn pseudoinverse(&self, y: &MeasurementVector) -> Result<Signal1D> {
        check_dim("measurement length vs mask size", self.mask.m(), y.m())?;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.mask.n()];
        for (&b, &v) in self.bins.iter().zip(y.data()) {
            buf[b] = v;
        }
        self.fft.inverse_in_place(&mut buf);
        Ok(Signal1D::new(buf))
    }

    /// Orthogonal projection `A^dagger A`.
    pub fn project(&self, sig: &Signal1D) -> Result<Signal1D> {
        self.pseudoinverse(&self.forward(sig)?)
    }
}
