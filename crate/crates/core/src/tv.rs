//! TV-regularized reconstruction
//!
//! ```text
//! argmin_z ||A z - y||_2^2 + lambda ||grad z||_1
//! ```
//!
//! solved by ADMM on the splitting `w = grad z` with scaled dual `u`:
//!
//! 1. `(2 A^*A + tau grad^*grad) z = 2 A^*y + tau grad^*(w - u)`, solved exactly
//!    in the Fourier basis where both operators are diagonal,
//! 2. `w = soft(grad z + u, lambda / tau)` entrywise (anisotropic TV),
//! 3. `u = u + grad z - w`.
//!
//! The iteration count is fixed so the solver is a deterministic function of
//! its inputs and can be differentiated as an unrolled graph (see `attack`).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seed::rng_for;
use crate::transforms::gradient::{grad2_adjoint_into, grad2_into};
use crate::transforms::{grad2, laplacian_symbol, GradientField, SamplingMask, SubsampledFourier};
use crate::types::{Image, MeasurementVector};

/// Proximal map of `t |.|` on a complex scalar.
#[inline]
pub fn soft_threshold(v: Complex64, t: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= t {
        Complex64::new(0.0, 0.0)
    } else {
        v * ((mag - t) / mag)
    }
}

/// Full ADMM iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub z: Image,
    pub w: GradientField,
    pub u: GradientField,
}

impl AdmmState {
    pub fn zeros(n: usize) -> Self {
        Self {
            z: Image::zeros(n),
            w: GradientField::zeros(n),
            u: GradientField::zeros(n),
        }
    }

    /// Starts from an image estimate with `w = grad z` and a zero dual.
    pub fn from_image(z: Image) -> Self {
        let w = grad2(&z);
        let u = GradientField::zeros(z.n());
        Self { z, w, u }
    }
}

impl From<Image> for AdmmState {
    fn from(z: Image) -> Self {
        Self::from_image(z)
    }
}

#[derive(Clone, Debug)]
pub struct ReconConfig {
    /// Regularization weight.
    pub lambda: f64,
    /// ADMM coupling parameter `tau`.
    pub penalty: f64,
    pub iterations: usize,
    pub warm_start: Option<AdmmState>,
}

impl ReconConfig {
    pub fn new(lambda: f64, penalty: f64, iterations: usize) -> Self {
        Self {
            lambda,
            penalty,
            iterations,
            warm_start: None,
        }
    }

    /// Parameters expressed relative to the measurement scale:
    /// `lambda = lambda_scale * ||y||_2` and `tau = penalty_factor * lambda`.
    pub fn relative(lambda_scale: f64, penalty_factor: f64, y_norm: f64, iterations: usize) -> Self {
        let lambda = lambda_scale * y_norm;
        Self::new(lambda, penalty_factor * lambda, iterations)
    }

    pub fn with_warm_start(mut self, state: impl Into<AdmmState>) -> Self {
        self.warm_start = Some(state.into());
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::InvalidParameter(format!("penalty must be positive, got {}", self.penalty)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iteration count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-iteration scratch buffers.
pub(crate) struct Workspace {
    pub(crate) q_dx: Vec<Complex64>,
    pub(crate) q_dy: Vec<Complex64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            q_dx: vec![zero; n * n],
            q_dy: vec![zero; n * n],
        }
    }
}

/// ADMM solver for one mask and one parameter pair.
#[derive(Clone)]
pub struct TvSolver {
    op: SubsampledFourier,
    lambda: f64,
    penalty: f64,
    /// Reciprocal of `2 mask + tau * laplacian` in FFT order, 0 where that vanishes.
    inv_denom: Vec<f64>,
}

impl TvSolver {
    pub fn new(mask: &SamplingMask, lambda: f64, penalty: f64) -> Result<Self> {
        ReconConfig::new(lambda, penalty, 1).validate()?;
        Ok(Self::new_unchecked(mask, lambda, penalty))
    }

    /// Allows `lambda == 0` (the linear least-squares iteration).
    pub(crate) fn new_unchecked(mask: &SamplingMask, lambda: f64, penalty: f64) -> Self {
        let inv_denom = laplacian_symbol(mask.n())
            .into_iter()
            .zip(mask.retained())
            .map(|(lap, &keep)| {
                let d = if keep { 2.0 } else { 0.0 } + penalty * lap;
                if d > 0.0 {
                    1.0 / d
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            op: SubsampledFourier::new(mask),
            lambda,
            penalty,
            inv_denom,
        }
    }

    pub fn n(&self) -> usize {
        self.op.mask().n()
    }

    pub fn mask(&self) -> &SamplingMask {
        self.op.mask()
    }

    pub fn operator(&self) -> &SubsampledFourier {
        &self.op
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn threshold(&self) -> f64 {
        self.lambda / self.penalty
    }

    /// Spectrum of `2 A^* y`, i.e. `2 P^* y`.
    pub(crate) fn data_spectrum(&self, y: &MeasurementVector) -> Vec<Complex64> {
        let mut spec = self.op.embed(y.data());
        spec.iter_mut().for_each(|v| *v *= 2.0);
        spec
    }

    /// Applies `(2 A^*A + tau grad^*grad)^+` to `rhs` in place (self-adjoint).
    pub(crate) fn solve_in_place(&self, rhs: &mut [Complex64]) {
        self.op.fft().forward_in_place(rhs);
        rhs.iter_mut().zip(&self.inv_denom).for_each(|(v, d)| *v *= *d);
        self.op.fft().inverse_in_place(rhs);
    }

    /// `z = solve(2 A^*y + tau grad^*(q))` given the data spectrum and `q = w - u`.
    pub(crate) fn z_update(
        &self,
        data_spec: &[Complex64],
        q_dx: &[Complex64],
        q_dy: &[Complex64],
        z: &mut [Complex64],
    ) {
        let n = self.n();
        grad2_adjoint_into(q_dx, q_dy, n, z);
        let fft = self.op.fft();
        fft.forward_in_place(z);
        for ((v, d), b) in z.iter_mut().zip(&self.inv_denom).zip(data_spec) {
            *v = (*v * self.penalty + b) * *d;
        }
        fft.inverse_in_place(z);
    }

    /// One ADMM iteration in place. When `tape` is given, the pre-threshold
    /// value `v = grad z + u` is appended to it.
    pub(crate) fn step(
        &self,
        data_spec: &[Complex64],
        state: &mut AdmmState,
        ws: &mut Workspace,
        tape: Option<&mut Vec<GradientField>>,
    ) {
        let n = self.n();
        for k in 0..n * n {
            ws.q_dx[k] = state.w.dx[k] - state.u.dx[k];
            ws.q_dy[k] = state.w.dy[k] - state.u.dy[k];
        }
        self.z_update(data_spec, &ws.q_dx, &ws.q_dy, state.z.data_mut());
        // v = grad z + u, kept in q
        grad2_into(state.z.data(), n, &mut ws.q_dx, &mut ws.q_dy);
        let t = self.threshold();
        for k in 0..n * n {
            let vx = ws.q_dx[k] + state.u.dx[k];
            let vy = ws.q_dy[k] + state.u.dy[k];
            ws.q_dx[k] = vx;
            ws.q_dy[k] = vy;
            let wx = soft_threshold(vx, t);
            let wy = soft_threshold(vy, t);
            state.w.dx[k] = wx;
            state.w.dy[k] = wy;
            state.u.dx[k] = vx - wx;
            state.u.dy[k] = vy - wy;
        }
        if let Some(tape) = tape {
            tape.push(GradientField::from_parts(n, ws.q_dx.clone(), ws.q_dy.clone()).expect("n^2 entries"));
        }
    }

    pub fn run(
        &self,
        y: &MeasurementVector,
        iterations: usize,
        start: Option<&AdmmState>,
    ) -> Result<AdmmState> {
        check_dim("measurement length vs mask size", self.mask().m(), y.m())?;
        let n = self.n();
        let mut state = match start {
            Some(s) => {
                check_dim("warm start side", n, s.z.n())?;
                s.clone()
            }
            None => AdmmState::zeros(n),
        };
        let data_spec = self.data_spectrum(y);
        let mut ws = Workspace::new(n);
        for _ in 0..iterations {
            self.step(&data_spec, &mut state, &mut ws, None);
        }
        Ok(state)
    }

    /// `(2 A^*A + tau grad^*grad) z`, for checking the exactness of the z-update.
    pub fn apply_normal_operator(&self, z: &Image) -> Image {
        let n = self.n();
        let mut spec = z.data().to_vec();
        let fft = self.op.fft();
        fft.forward_in_place(&mut spec);
        let lap = laplacian_symbol(n);
        for (k, v) in spec.iter_mut().enumerate() {
            let mask_term = if self.mask().contains(k) { 2.0 } else { 0.0 };
            *v *= mask_term + self.penalty * lap[k];
        }
        fft.inverse_in_place(&mut spec);
        Image::from_vec(n, spec).expect("n^2 entries")
    }

    /// Right-hand side `2 A^*y + tau grad^*(q)` of the z-update.
    pub fn z_update_rhs(&self, y: &MeasurementVector, q: &GradientField) -> Result<Image> {
        let mut rhs = self.op.pseudoinverse(y)?.scale(Complex64::new(2.0, 0.0));
        let div = crate::transforms::grad2_adjoint(q);
        for (r, d) in rhs.data_mut().iter_mut().zip(div.data()) {
            *r += d * self.penalty;
        }
        Ok(rhs)
    }

    /// The exact z-update as a public operation.
    pub fn solve_z(&self, y: &MeasurementVector, q: &GradientField) -> Result<Image> {
        check_dim("measurement length vs mask size", self.mask().m(), y.m())?;
        let mut z = vec![Complex64::new(0.0, 0.0); self.n() * self.n()];
        self.z_update(&self.data_spectrum(y), &q.dx, &q.dy, &mut z);
        Image::from_vec(self.n(), z)
    }
}

/// Runs exactly `cfg.iterations` ADMM iterations and returns the final image.
pub fn reconstruct_tv(y: &MeasurementVector, mask: &SamplingMask, cfg: &ReconConfig) -> Result<Image> {
    Ok(reconstruct_tv_state(y, mask, cfg)?.z)
}

/// Like [`reconstruct_tv`] but returns the whole ADMM state, suitable as a warm start.
pub fn reconstruct_tv_state(
    y: &MeasurementVector,
    mask: &SamplingMask,
    cfg: &ReconConfig,
) -> Result<AdmmState> {
    cfg.validate()?;
    check_dim("measurement length vs mask size", mask.m(), y.m())?;
    let solver = TvSolver::new(mask, cfg.lambda, cfg.penalty)?;
    solver.run(y, cfg.iterations, cfg.warm_start.as_ref())
}

/// `||A z - y||_2^2 + lambda ||grad z||_1`.
pub fn tv_objective(z: &Image, y: &MeasurementVector, mask: &SamplingMask, lambda: f64) -> Result<f64> {
    let az = SubsampledFourier::new(mask).forward(z)?;
    check_dim("measurement length", az.m(), y.m())?;
    let fit: f64 = az.data().iter().zip(y.data()).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(fit + lambda * grad2(z).norm1())
}

/// Complex Gaussian noise with `||noise||_2 = rel * ||y||_2` exactly.
pub fn gaussian_noise<R: Rng + ?Sized>(y: &MeasurementVector, rel: f64, rng: &mut R) -> MeasurementVector {
    let raw: Vec<Complex64> = (0..y.m())
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let raw = MeasurementVector::new(raw);
    let norm = raw.norm2();
    if norm == 0.0 || rel == 0.0 {
        return MeasurementVector::zeros(y.m());
    }
    raw.scale(Complex64::new(rel * y.norm2() / norm, 0.0))
}

/// Parameter grid in relative units (see [`ReconConfig::relative`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGrid {
    pub lambda_scales: Vec<f64>,
    pub penalty_factors: Vec<f64>,
}

impl Default for CalibrationGrid {
    /// Eight log-spaced scales in `[1e-4, 1]` times penalty factors `{0.1, 1, 10}`.
    fn default() -> Self {
        let lambda_scales = (0..8).map(|k| 10f64.powf(-4.0 + 4.0 * k as f64 / 7.0)).collect();
        Self {
            lambda_scales,
            penalty_factors: vec![0.1, 1.0, 10.0],
        }
    }
}

impl CalibrationGrid {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.lambda_scales.len() * self.penalty_factors.len());
        for &l in &self.lambda_scales {
            for &p in &self.penalty_factors {
                out.push((l, p));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// `(lambda_scale, penalty_factor)` pairs.
    pub grid: Vec<(f64, f64)>,
    /// Mean relative l2 reconstruction error per pair.
    pub scores: Vec<f64>,
    pub chosen: (f64, f64),
    pub noise_level: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl CalibrationReport {
    /// Absolute parameters for a given measurement vector.
    pub fn config_for(&self, y: &MeasurementVector, iterations: usize) -> ReconConfig {
        ReconConfig::relative(self.chosen.0, self.chosen.1, y.norm2(), iterations)
    }
}

/// Grid search for the regularization and ADMM parameters.
///
/// Each sample is measured through `mask`, perturbed with seeded Gaussian
/// noise of relative level `noise_level` (sample `i` uses stream `i`, shared by
/// every grid pair), reconstructed, and scored by `||z - x||_2 / ||x||_2`.
/// The pair with the lowest mean score wins; ties go to the smaller lambda,
/// then the smaller penalty.
pub fn calibrate(
    samples: &[Image],
    mask: &SamplingMask,
    noise_level: f64,
    grid: &CalibrationGrid,
    iterations: usize,
    seed: u64,
) -> Result<CalibrationReport> {
    if samples.is_empty() {
        return Err(Error::Empty("calibration samples"));
    }
    let pairs = grid.pairs();
    if pairs.is_empty() {
        return Err(Error::Empty("calibration grid"));
    }
    if !(noise_level >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise level must be nonnegative, got {noise_level}")));
    }
    let op = SubsampledFourier::new(mask);
    let measured: Vec<(MeasurementVector, f64)> = samples
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let clean = op.forward(x)?;
            let noise = gaussian_noise(&clean, noise_level, &mut rng_for(seed, i as u64));
            Ok((clean.add(&noise)?, x.norm2()))
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..samples.len()).map(move |s| (p, s)))
        .collect();
    let errors: Vec<f64> = jobs
        .par_iter()
        .map(|&(p, s)| {
            let (scale, factor) = pairs[p];
            let (y, x_norm) = &measured[s];
            let cfg = ReconConfig::relative(scale, factor, y.norm2(), iterations);
            let z = reconstruct_tv(y, mask, &cfg)?;
            let err = z.sub(&samples[s])?.norm2();
            Ok(if *x_norm > 0.0 { err / x_norm } else { err })
        })
        .collect::<Result<_>>()?;

    let per = samples.len();
    let scores: Vec<f64> = errors.chunks(per).map(|c| c.iter().sum::<f64>() / per as f64).collect();
    let mut best = 0;
    for k in 1..pairs.len() {
        let better = scores[k] < scores[best]
            || (scores[k] == scores[best]
                && (pairs[k].0 < pairs[best].0 || (pairs[k].0 == pairs[best].0 && pairs[k].1 < pairs[best].1)));
        if better {
            best = k;
        }
    }
    Ok(CalibrationReport {
        chosen: pairs[best],
        grid: pairs,
        scores,
        noise_level,
        iterations,
        seed,
    })
}
