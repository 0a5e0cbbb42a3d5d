//! Periodic finite differences.
//!
//! In 2D we use forward differences `dx[i,j] = z[i,j+1] - z[i,j]` and
//! `dy[i,j] = z[i+1,j] - z[i,j]` (indices mod n). In 1D we use the backward
//! difference `(grad z)_j = z_j - z_{j-1}`, whose Fourier multiplier is
//! `1 - exp(-2 pi i k / n)`.

use num_complex::Complex64;

use crate::error::{check_dim, Result};
use crate::transforms::fft::centered_index;
use crate::types::{real_dot, Image, Signal1D};

#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    n: usize,
    pub dx: Vec<Complex64>,
    pub dy: Vec<Complex64>,
}

impl GradientField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            dx: vec![Complex64::new(0.0, 0.0); n * n],
            dy: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_parts(n: usize, dx: Vec<Complex64>, dy: Vec<Complex64>) -> Result<Self> {
        check_dim("gradient dx", n * n, dx.len())?;
        check_dim("gradient dy", n * n, dy.len())?;
        Ok(Self { n, dx, dy })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Anisotropic l1 norm `sum |dx| + |dy|`.
    pub fn norm1(&self) -> f64 {
        self.dx.iter().chain(&self.dy).map(|v| v.norm()).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn real_dot(&self, other: &GradientField) -> f64 {
        real_dot(&self.dx, &other.dx) + real_dot(&self.dy, &other.dy)
    }
}

pub(crate) fn grad2_into(z: &[Complex64], n: usize, dx: &mut [Complex64], dy: &mut [Complex64]) {
    for i in 0..n {
        let down = ((i + 1) % n) * n;
        let row = i * n;
        for j in 0..n {
            let right = (j + 1) % n;
            let here = z[row + j];
            dx[row + j] = z[row + right] - here;
            dy[row + j] = z[down + j] - here;
        }
    }
}

pub(crate) fn grad2_adjoint_into(dx: &[Complex64], dy: &[Complex64], n: usize, out: &mut [Complex64]) {
    for i in 0..n {
        let up = ((i + n - 1) % n) * n;
        let row = i * n;
        for j in 0..n {
            let left = (j + n - 1) % n;
            out[row + j] = dx[row + left] - dx[row + j] + dy[up + j] - dy[row + j];
        }
    }
}

pub fn grad2(img: &Image) -> GradientField {
    let n = img.n();
    let mut g = GradientField::zeros(n);
    grad2_into(img.data(), n, &mut g.dx, &mut g.dy);
    g
}

/// Adjoint of [`grad2`] with respect to `Re <., .>` (a negative divergence).
pub fn grad2_adjoint(g: &GradientField) -> Image {
    let n = g.n;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    grad2_adjoint_into(&g.dx, &g.dy, n, &mut out);
    Image::from_vec(n, out).expect("length n^2")
}

/// Eigenvalues of `grad2^* grad2` in FFT order: `4 sin^2(pi k/n) + 4 sin^2(pi l/n)`.
pub fn laplacian_symbol(n: usize) -> Vec<f64> {
    let s: Vec<f64> = (0..n)
        .map(|k| {
            let t = (std::f64::consts::PI * k as f64 / n as f64).sin();
            4.0 * t * t
        })
        .collect();
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            out.push(s[k] + s[l]);
        }
    }
    out
}

/// Periodic backward difference `z_j - z_{j-1 mod n}`.
pub fn grad1(sig: &Signal1D) -> Signal1D {
    let z = sig.data();
    let n = z.len();
    Signal1D::new((0..n).map(|j| z[j] - z[(j + n - 1) % n]).collect())
}

/// Adjoint of [`grad1`].
pub fn grad1_adjoint(sig: &Signal1D) -> Signal1D {
    let g = sig.data();
    let n = g.len();
    Signal1D::new((0..n).map(|j| g[j] - g[(j + 1) % n]).collect())
}

/// Fourier multiplier of [`grad1`] at centered frequency `k`.
pub fn grad1_multiplier(k: isize, n: usize) -> Complex64 {
    Complex64::new(1.0, 0.0)
        - Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64)
}

/// Multipliers for every FFT bin.
pub fn grad1_multipliers_fft_order(n: usize) -> Vec<Complex64> {
    (0..n).map(|b| grad1_multiplier(centered_index(b, n), n)).collect()
}

/// Inverts [`grad1`] up to the additive constant, which is fixed so that the
/// entries sum to `total`. Entry `w_0` is ignored; a consistent `w` sums to 0.
pub fn integrate_gradient(w: &Signal1D, total: Complex64) -> Signal1D {
    let n = w.n();
    let mut z = Vec::with_capacity(n);
    let mut acc = Complex64::new(0.0, 0.0);
    z.push(acc);
    for wj in &w.data()[1..] {
        acc += wj;
        z.push(acc);
    }
    let shift = (total - z.iter().sum::<Complex64>()) / n as f64;
    z.iter_mut().for_each(|v| *v += shift);
    Signal1D::new(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::fft::{centered_position, dft1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = grad2(&Image::constant(8, Complex64::new(0.3, 0.1)));
        assert_eq!(g.norm1(), 0.0);
    }

    #[test]
    fn single_row_step_is_two_sparse() {
        let n = 8;
        let mut img = Image::zeros(n);
        for j in 3..n {
            img.set(2, j, Complex64::new(1.0, 0.0));
        }
        let g = grad2(&img);
        let nz: Vec<(usize, Complex64)> = g
            .dx
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(k, v)| (k, *v))
            .collect();
        assert_eq!(nz, vec![(2 * n + 2, Complex64::new(1.0, 0.0)), (2 * n + 7, Complex64::new(-1.0, 0.0))]);
        let sx: Complex64 = g.dx.iter().sum();
        let sy: Complex64 = g.dy.iter().sum();
        assert!(sx.norm() < 1e-15 && sy.norm() < 1e-15);
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 8;
        for _ in 0..5 {
            let x = Image::from_vec(n, (0..n * n).map(|_| rand_c(&mut rng)).collect()).unwrap();
            let g = GradientField::from_parts(
                n,
                (0..n * n).map(|_| rand_c(&mut rng)).collect(),
                (0..n * n).map(|_| rand_c(&mut rng)).collect(),
            )
            .unwrap();
            let lhs = grad2(&x).real_dot(&g);
            let rhs = real_dot(x.data(), grad2_adjoint(&g).data());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn laplacian_symbol_diagonalizes_grad_adjoint_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 8;
        let x = Image::from_vec(n, (0..n * n).map(|_| rand_c(&mut rng)).collect()).unwrap();
        let lhs = crate::transforms::fft::dft2(&grad2_adjoint(&grad2(&x)));
        let spec = crate::transforms::fft::dft2(&x);
        for ((a, b), s) in lhs.data().iter().zip(spec.data()).zip(laplacian_symbol(n)) {
            assert!((a - b * s).norm() < 1e-12);
        }
    }

    #[test]
    fn fourier_gradient_identity_1d() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 32;
        let z = Signal1D::new((0..n).map(|_| rand_c(&mut rng)).collect());
        let lhs = dft1(&grad1(&z)).unwrap();
        let rhs = dft1(&z).unwrap();
        for k in -(n as isize) / 2 + 1..=n as isize / 2 {
            let p = centered_position(k, n);
            assert!((lhs.data()[p] - grad1_multiplier(k, n) * rhs.data()[p]).norm() < 1e-10);
        }
    }

    #[test]
    fn integration_inverts_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let x = Signal1D::new((0..64).map(|_| rand_c(&mut rng)).collect());
        let total: Complex64 = x.data().iter().sum();
        let back = integrate_gradient(&grad1(&x), total);
        assert!(back.sub(&x).unwrap().norm_inf() < 1e-12);
        let s = Signal1D::new((0..16).map(|_| rand_c(&mut rng)).collect());
        let t = Signal1D::new((0..16).map(|_| rand_c(&mut rng)).collect());
        let lhs = real_dot(grad1(&s).data(), t.data());
        let rhs = real_dot(s.data(), grad1_adjoint(&t).data());
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
