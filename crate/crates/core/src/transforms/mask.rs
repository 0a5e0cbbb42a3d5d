//! Frequency sampling masks.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::transforms::fft::{centered_index, fft_bin};

/// Set of retained 2D frequencies (FFT order), with the row-major scan of the
/// bitmap as canonical ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingMask {
    n: usize,
    retained: Vec<bool>,
    order: Vec<usize>,
}

impl SamplingMask {
    pub fn from_bitmap(n: usize, retained: Vec<bool>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("mask side length must be positive".into()));
        }
        check_dim("mask bitmap", n * n, retained.len())?;
        let order: Vec<usize> = retained
            .iter()
            .enumerate()
            .filter_map(|(k, &keep)| keep.then_some(k))
            .collect();
        if order.is_empty() {
            return Err(Error::Empty("sampling mask retains no frequencies"));
        }
        Ok(Self { n, retained, order })
    }

    /// Mask from flat FFT-order indices; duplicates are merged.
    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut retained = vec![false; n * n];
        for &k in indices {
            if k >= n * n {
                return Err(Error::InvalidParameter(format!(
                    "frequency index {k} out of range for n = {n}"
                )));
            }
            retained[k] = true;
        }
        Self::from_bitmap(n, retained)
    }

    pub fn full(n: usize) -> Self {
        Self::from_bitmap(n, vec![true; n * n]).expect("n > 0")
    }

    /// `m` distinct frequencies drawn uniformly at random.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || m > n * n {
            return Err(Error::InvalidParameter(format!(
                "cannot draw {m} frequencies from {} bins",
                n * n
            )));
        }
        let picked = sample(rng, n * n, m).into_vec();
        Self::from_indices(n, &picked)
    }

    /// Union of `lines` digital lines through the zero frequency at angles
    /// `k pi / lines`. Each line is sampled every `1/sqrt(2)` pixels and every
    /// sample is rounded to the nearest grid index, which keeps the rasterized
    /// lines 8-connected at every angle.
    pub fn radial(n: usize, lines: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("radial mask needs n >= 2, got {n}")));
        }
        if lines == 0 {
            return Err(Error::InvalidParameter("radial mask needs at least one line".into()));
        }
        let half = (n / 2) as isize;
        let step = std::f64::consts::FRAC_1_SQRT_2;
        // samples out to the corners of the centered square
        let reach = (n as f64 / (2.0 * step * step)).ceil() as isize + 2;
        let mut retained = vec![false; n * n];
        for k in 0..lines {
            let theta = k as f64 * std::f64::consts::PI / lines as f64;
            let (sin, cos) = theta.sin_cos();
            for t in -reach..=reach {
                let r = t as f64 * step;
                let row = (r * sin).round() as isize;
                let col = (r * cos).round() as isize;
                if row.abs() > half || col.abs() > half {
                    continue;
                }
                retained[fft_bin(row, n) * n + fft_bin(col, n)] = true;
            }
        }
        Self::from_bitmap(n, retained)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of retained frequencies.
    #[inline]
    pub fn m(&self) -> usize {
        self.order.len()
    }

    pub fn fraction(&self) -> f64 {
        self.m() as f64 / (self.n * self.n) as f64
    }

    /// Subsampling factor `n^2 / m`.
    pub fn subsampling_factor(&self) -> f64 {
        (self.n * self.n) as f64 / self.m() as f64
    }

    pub fn retained(&self) -> &[bool] {
        &self.retained
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    #[inline]
    pub fn contains(&self, flat: usize) -> bool {
        self.retained[flat]
    }

    /// Retained frequencies as centered `(row, col)` pairs, in canonical order.
    pub fn centered_indices(&self) -> Vec<(isize, isize)> {
        self.order
            .iter()
            .map(|&k| (centered_index(k / self.n, self.n), centered_index(k % self.n, self.n)))
            .collect()
    }
}

/// Subset of the 1D frequencies `{-n/2+1, ..., n/2}`, kept sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask1D {
    n: usize,
    indices: Vec<isize>,
}

impl Mask1D {
    pub fn new(n: usize, indices: impl IntoIterator<Item = isize>) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "1D mask needs an even length >= 2, got {n}"
            )));
        }
        let lo = -(n as isize) / 2 + 1;
        let hi = n as isize / 2;
        let set: BTreeSet<isize> = indices.into_iter().collect();
        if let Some(bad) = set.iter().find(|&&k| k < lo || k > hi) {
            return Err(Error::InvalidParameter(format!(
                "frequency {bad} outside [{lo}, {hi}]"
            )));
        }
        if set.is_empty() {
            return Err(Error::Empty("1D mask retains no frequencies"));
        }
        Ok(Self {
            n,
            indices: set.into_iter().collect(),
        })
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, -(n as isize) / 2 + 1..=n as isize / 2)
    }

    /// `m` distinct frequencies drawn uniformly from `{-n/2+1, ..., n/2}`.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidParameter(format!(
                "cannot draw {m} frequencies from {n}"
            )));
        }
        let lo = -(n as isize) / 2 + 1;
        Self::new(n, sample(rng, n, m).into_iter().map(|p| lo + p as isize))
    }

    /// Same mask with the zero frequency added.
    pub fn with_zero(&self) -> Self {
        Self::new(self.n, self.indices.iter().copied().chain(std::iter::once(0)))
            .expect("0 is always in range")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[isize] {
        &self.indices
    }

    pub fn contains(&self, k: isize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    /// FFT-order bins of the retained frequencies, in mask order.
    pub fn fft_bins(&self) -> Vec<usize> {
        self.indices.iter().map(|&k| fft_bin(k, self.n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radial_fractions_at_256() {
        // 25, 40 and 80 lines cover about 11%, 17% and 32% of a 256x256 grid.
        for (lines, target, tol) in [(25, 0.11, 0.01), (40, 0.17, 0.01), (80, 0.32, 0.02)] {
            let mask = SamplingMask::radial(256, lines).unwrap();
            let f = mask.fraction();
            assert!((f - target).abs() <= tol, "{lines} lines: fraction {f}");
        }
    }

    #[test]
    fn radial_keeps_dc_and_saturates() {
        let mask = SamplingMask::radial(16, 3).unwrap();
        assert!(mask.contains(0));
        let dense = SamplingMask::radial(16, 64).unwrap();
        assert_eq!(dense.m(), 256);
    }

    #[test]
    fn radial_is_conjugate_symmetric_on_interior() {
        let n = 64;
        let mask = SamplingMask::radial(n, 10).unwrap();
        for (r, c) in mask.centered_indices() {
            if r.abs() < n as isize / 2 && c.abs() < n as isize / 2 {
                let flat = fft_bin(-r, n) * n + fft_bin(-c, n);
                assert!(mask.contains(flat), "({r},{c}) without mirror");
            }
        }
    }

    #[test]
    fn canonical_order_is_row_major() {
        let mask = SamplingMask::from_indices(4, &[9, 2, 2, 15]).unwrap();
        assert_eq!(mask.order(), &[2, 9, 15]);
        assert_eq!(mask.m(), 3);
    }

    #[test]
    fn empty_mask_is_rejected() {
        assert!(SamplingMask::from_bitmap(4, vec![false; 16]).is_err());
        assert!(SamplingMask::from_bitmap(4, vec![true; 15]).is_err());
        assert!(Mask1D::new(8, std::iter::empty()).is_err());
    }

    #[test]
    fn mask1d_range_and_random_draws() {
        assert!(Mask1D::new(8, [-3, 4]).is_ok());
        assert!(Mask1D::new(8, [-4]).is_err());
        assert!(Mask1D::new(7, [0]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask = Mask1D::random(128, 40, &mut rng).unwrap();
        assert_eq!(mask.m(), 40);
        assert!(mask.indices().windows(2).all(|w| w[0] < w[1]));
        assert!(mask.with_zero().contains(0));
        assert_eq!(Mask1D::full(8).unwrap().m(), 8);
    }
}
