//! Seeded synthetic test data: ellipse phantoms (2D) and sparse or
//! piecewise-constant signals (1D).

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Image, Signal1D};

/// One filled ellipse. Coordinates are in pixels, `(row, col)`, pixel centers at integers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub center: (f64, f64),
    pub semi_axes: (f64, f64),
    /// Rotation in radians.
    pub angle: f64,
    pub intensity: f64,
}

impl Ellipse {
    #[inline]
    pub fn contains(&self, row: f64, col: f64) -> bool {
        let (s, c) = self.angle.sin_cos();
        let dr = row - self.center.0;
        let dc = col - self.center.1;
        let u = dr * c + dc * s;
        let v = -dr * s + dc * c;
        let (a, b) = self.semi_axes;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub n: usize,
    pub seed: u64,
    /// Inclusive range for the number of ellipses.
    pub ellipse_count: (usize, usize),
    /// Range for signed ellipse intensities, within `[-1, 1]`.
    pub intensity: (f64, f64),
    /// Range for semi-axes as a fraction of `n`.
    pub axis: (f64, f64),
}

impl PhantomSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            ellipse_count: (3, 10),
            intensity: (-0.6, 0.9),
            axis: (0.05, 0.40),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 16 {
            return Err(Error::InvalidParameter(format!("phantom needs n >= 16, got {}", self.n)));
        }
        let (c0, c1) = self.ellipse_count;
        let (i0, i1) = self.intensity;
        let (a0, a1) = self.axis;
        if c0 > c1 {
            return Err(Error::InvalidParameter("empty ellipse count range".into()));
        }
        if !(i0 <= i1 && i0 >= -1.0 && i1 <= 1.0) {
            return Err(Error::InvalidParameter("intensity range must be nonempty and inside [-1, 1]".into()));
        }
        if !(a0 <= a1 && a0 > 0.0) {
            return Err(Error::InvalidParameter("axis range must be nonempty and positive".into()));
        }
        Ok(())
    }

    /// Ellipses drawn for this spec, before rasterization.
    pub fn ellipses(&self) -> Result<Vec<Ellipse>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n as f64;
        let count = rng.random_range(self.ellipse_count.0..=self.ellipse_count.1);
        Ok((0..count)
            .map(|_| {
                let center = (rng.random_range(0.2 * n..=0.8 * n), rng.random_range(0.2 * n..=0.8 * n));
                let semi_axes = (
                    rng.random_range(self.axis.0 * n..=self.axis.1 * n),
                    rng.random_range(self.axis.0 * n..=self.axis.1 * n),
                );
                let angle = rng.random_range(0.0..std::f64::consts::PI);
                let intensity = rng.random_range(self.intensity.0..=self.intensity.1);
                Ellipse {
                    center,
                    semi_axes,
                    angle,
                    intensity,
                }
            })
            .collect())
    }
}

/// Accumulates ellipse intensities and clips the sum to `[0, 1]`.
pub fn render_ellipses(n: usize, ellipses: &[Ellipse]) -> Image {
    let mut values = vec![0.0f64; n * n];
    for e in ellipses {
        for i in 0..n {
            for j in 0..n {
                if e.contains(i as f64, j as f64) {
                    values[i * n + j] += e.intensity;
                }
            }
        }
    }
    let data = values
        .into_iter()
        .map(|v| Complex64::new(v.clamp(0.0, 1.0), 0.0))
        .collect();
    Image::from_vec(n, data).expect("n > 0")
}

pub fn gen_phantom(spec: &PhantomSpec) -> Result<Image> {
    Ok(render_ellipses(spec.n, &spec.ellipses()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignalMode {
    /// `s` nonzero entries.
    SpikeTrain,
    /// Periodic gradient with exactly `s` nonzero entries.
    PiecewiseConstant,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseSpec1D {
    pub n: usize,
    pub s: usize,
    pub mode: SignalMode,
    pub min_magnitude: f64,
    pub seed: u64,
}

/// Random real 1D test signal.
///
/// Spike trains avoid index 0 and piecewise-constant signals avoid jumps at
/// indices 0 and 1, so adding the unit spike at index 0 raises the sparsity
/// by exactly one (respectively the gradient sparsity by exactly two).
/// Values are drawn with magnitudes in `[min_magnitude, min_magnitude + 1]`.
pub fn gen_signal_1d(spec: &SparseSpec1D) -> Result<Signal1D> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    gen_signal_1d_with(spec, &mut rng)
}

pub(crate) fn gen_signal_1d_with<R: Rng + ?Sized>(spec: &SparseSpec1D, rng: &mut R) -> Result<Signal1D> {
    let n = spec.n;
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("signal length must be even and >= 4, got {n}")));
    }
    if 4 * spec.s >= n {
        return Err(Error::InvalidParameter(format!(
            "sparsity {} too large for n = {n} (need s < n/4)",
            spec.s
        )));
    }
    if !(spec.min_magnitude > 0.0) {
        return Err(Error::InvalidParameter("min_magnitude must be positive".into()));
    }
    let lo = spec.min_magnitude;
    let signed = |rng: &mut R| {
        let mag = rng.random_range(lo..=lo + 1.0);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    match spec.mode {
        SignalMode::SpikeTrain => {
            let mut x = vec![0.0; n];
            for p in sample(rng, n - 1, spec.s).into_iter() {
                x[p + 1] = signed(rng);
            }
            Ok(Signal1D::from_real(&x))
        }
        SignalMode::PiecewiseConstant => {
            let base = rng.random_range(-1.0..=1.0);
            if spec.s == 0 {
                return Ok(Signal1D::from_real(&vec![base; n]));
            }
            if spec.s == 1 {
                return Err(Error::InvalidParameter(
                    "a periodic piecewise-constant signal cannot have exactly one jump".into(),
                ));
            }
            let mut jumps: Vec<usize> = sample(rng, n - 2, spec.s).into_iter().map(|p| p + 2).collect();
            jumps.sort_unstable();
            // levels[0] covers the wrap-around segment that contains indices 0 and 1
            let levels = loop {
                let mut levels = vec![base];
                for _ in 1..spec.s {
                    let prev = *levels.last().unwrap();
                    levels.push(prev + signed(rng));
                }
                if (levels[spec.s - 1] - levels[0]).abs() >= lo {
                    break levels;
                }
            };
            let mut x = vec![levels[0]; n];
            for (seg, w) in jumps.windows(2).enumerate() {
                for v in &mut x[w[0]..w[1]] {
                    *v = levels[seg + 1];
                }
            }
            Ok(Signal1D::from_real(&x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::grad1;

    #[test]
    fn zero_ellipses_give_zero_image() {
        let spec = PhantomSpec {
            ellipse_count: (0, 0),
            ..PhantomSpec::new(32, 1)
        };
        assert_eq!(gen_phantom(&spec).unwrap(), Image::zeros(32));
    }

    #[test]
    fn centered_ellipse_membership() {
        let n = 64;
        let e = Ellipse {
            center: (32.0, 32.0),
            semi_axes: (16.0, 16.0),
            angle: 0.3,
            intensity: 1.0,
        };
        let img = render_ellipses(n, &[e]);
        assert_eq!(img.get(32, 32).re, 1.0);
        assert_eq!(img.get(0, 0).re, 0.0);
        assert_eq!(img.get(n - 1, n - 1).re, 0.0);
    }

    #[test]
    fn phantom_is_deterministic_and_in_range() {
        let spec = PhantomSpec::new(64, 42);
        let a = gen_phantom(&spec).unwrap();
        let b = gen_phantom(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.is_real_unit_range());
        assert!(a.norm_inf() > 0.0);
        let c = gen_phantom(&PhantomSpec::new(64, 43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn phantom_rejects_bad_specs() {
        assert!(gen_phantom(&PhantomSpec::new(8, 1)).is_err());
        let spec = PhantomSpec {
            ellipse_count: (4, 2),
            ..PhantomSpec::new(32, 1)
        };
        assert!(gen_phantom(&spec).is_err());
    }

    fn spec(n: usize, s: usize, mode: SignalMode, seed: u64) -> SparseSpec1D {
        SparseSpec1D {
            n,
            s,
            mode,
            min_magnitude: 0.5,
            seed,
        }
    }

    #[test]
    fn zero_sparsity_signals() {
        let x = gen_signal_1d(&spec(32, 0, SignalMode::SpikeTrain, 1)).unwrap();
        assert_eq!(x.count_nonzero(0.0), 0);
        let x = gen_signal_1d(&spec(32, 0, SignalMode::PiecewiseConstant, 1)).unwrap();
        assert_eq!(grad1(&x).count_nonzero(1e-12), 0);
    }

    #[test]
    fn spike_train_contract() {
        for seed in 0..20 {
            let x = gen_signal_1d(&spec(128, 3, SignalMode::SpikeTrain, seed)).unwrap();
            assert_eq!(x.count_nonzero(1e-12), 3);
            assert_eq!(x.data()[0].norm(), 0.0);
            assert!(x.data().iter().all(|v| v.norm() == 0.0 || v.norm() >= 0.5));
        }
    }

    #[test]
    fn piecewise_constant_contract() {
        for seed in 0..20 {
            let x = gen_signal_1d(&spec(64, 2, SignalMode::PiecewiseConstant, seed)).unwrap();
            let g = grad1(&x);
            assert_eq!(g.count_nonzero(1e-12), 2);
            assert!(g.data()[0].norm() < 1e-12 && g.data()[1].norm() < 1e-12);
            let spiked = x.add(&Signal1D::spike(64)).unwrap();
            assert_eq!(grad1(&spiked).count_nonzero(1e-12), 4);
        }
    }

    #[test]
    fn sparsity_limit() {
        assert!(gen_signal_1d(&spec(32, 8, SignalMode::SpikeTrain, 1)).is_err());
        assert!(gen_signal_1d(&spec(32, 1, SignalMode::PiecewiseConstant, 1)).is_err());
    }
}
