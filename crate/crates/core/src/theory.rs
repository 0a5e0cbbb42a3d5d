//! One-dimensional constructions: the spike perturbation, equality-constrained
//! l1 and TV recovery, and Monte Carlo recovery experiments.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::phantom::{gen_signal_1d_with, SignalMode, SparseSpec1D};
use crate::seed::rng_for;
use crate::transforms::{centered_index, grad1, grad1_multiplier, integrate_gradient, Fft1, Mask1D, SubsampledFourier1D};
use crate::tv::soft_threshold;
use crate::types::{MeasurementVector, Signal1D};

const IDENTITY_TOL: f64 = 1e-12;

/// Measurements of the unit spike at index 0 and their pseudoinverse image.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikeAttack1D {
    pub n: usize,
    pub mask: Mask1D,
    /// Constant `1/sqrt(n)` on every retained frequency.
    pub e: MeasurementVector,
    /// `A^dagger e = (1/n) sum_k exp(2 pi i k j / n)`.
    pub r: Signal1D,
    /// `1 / ||r||_inf`, the amplification of the spike over `r`.
    pub alpha: f64,
}

/// Builds the spike perturbation for `mask` and checks its norm identities.
pub fn spike_attack(mask: &Mask1D) -> Result<SpikeAttack1D> {
    let n = mask.n();
    let m = mask.m();
    let op = SubsampledFourier1D::new(mask);
    let e = MeasurementVector::new(vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); m]);
    let r = op.pseudoinverse(&e)?;
    let alpha = 1.0 / r.norm_inf();

    let ratio = m as f64 / n as f64;
    if (r.norm2() - ratio.sqrt()).abs() > IDENTITY_TOL {
        return Err(Error::Invariant(format!(
            "||r||_2 = {} differs from sqrt(m/n) = {}",
            r.norm2(),
            ratio.sqrt()
        )));
    }
    if r.norm_inf() > ratio + IDENTITY_TOL {
        return Err(Error::Invariant(format!("||r||_inf = {} exceeds m/n = {ratio}", r.norm_inf())));
    }
    if alpha < (1.0 / ratio) * (1.0 - IDENTITY_TOL) {
        return Err(Error::Invariant(format!("alpha = {alpha} below n/m = {}", 1.0 / ratio)));
    }
    Ok(SpikeAttack1D {
        n,
        mask: mask.clone(),
        e,
        r,
        alpha,
    })
}

/// Stopping rule and iteration cap of the equality-constrained solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqSolverConfig {
    /// Primal and dual residuals relative to the iterate norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Soft-threshold level as a fraction of the largest entry of the starting point.
    pub threshold_factor: f64,
}

impl Default for EqSolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 50_000,
            threshold_factor: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqSolution {
    pub z: Signal1D,
    pub iterations: usize,
    pub converged: bool,
}

/// `min ||z||_1` subject to `A z = y` over complex signals.
///
/// ADMM on the split `z = w`: the z-step projects onto the affine constraint
/// set with `z = v - A^dagger(A v - y)`, the w-step soft-thresholds.
pub fn l1_min_eq(y: &MeasurementVector, mask: &Mask1D) -> Result<EqSolution> {
    l1_min_eq_with(y, mask, &EqSolverConfig::default())
}

pub fn l1_min_eq_with(y: &MeasurementVector, mask: &Mask1D, cfg: &EqSolverConfig) -> Result<EqSolution> {
    let op = SubsampledFourier1D::new(mask);
    check_dim("measurement length vs mask size", mask.m(), y.m())?;
    let n = mask.n();
    let base = op.pseudoinverse(y)?;
    let scale = base.norm_inf();
    if scale == 0.0 {
        return Ok(EqSolution {
            z: Signal1D::zeros(n),
            iterations: 0,
            converged: true,
        });
    }
    let t = cfg.threshold_factor * scale;
    let mut w = base.clone();
    let mut u = Signal1D::zeros(n);
    let mut z = base.clone();
    for it in 1..=cfg.max_iterations {
        // v - P v + A^dagger y
        let v = w.sub(&u)?;
        z = v.sub(&op.project(&v)?)?.add(&base)?;
        let w_prev = std::mem::replace(
            &mut w,
            Signal1D::new(
                z.data()
                    .iter()
                    .zip(u.data())
                    .map(|(a, b)| soft_threshold(a + b, t))
                    .collect(),
            ),
        );
        let primal = z.sub(&w)?;
        u = u.add(&primal)?;
        let dual = w.sub(&w_prev)?.norm2();
        let size = z.norm2().max(w.norm2());
        if primal.norm2() <= cfg.tolerance * size && dual <= cfg.tolerance * size {
            return Ok(EqSolution {
                z,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(EqSolution {
        z,
        iterations: cfg.max_iterations,
        converged: false,
    })
}

fn require_zero_frequency(mask: &Mask1D) -> Result<()> {
    if mask.contains(0) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(
            "TV recovery needs the zero frequency in the mask".into(),
        ))
    }
}

/// `min ||grad z||_1` subject to `A z = y`, by reduction to [`l1_min_eq`].
///
/// The measurements of `grad x` are `(1 - exp(-2 pi i k/n)) y_k`; the recovered
/// gradient is integrated and its constant fixed by the `k = 0` measurement.
pub fn tv_min_eq(y: &MeasurementVector, mask: &Mask1D) -> Result<EqSolution> {
    tv_min_eq_with(y, mask, &EqSolverConfig::default())
}

pub fn tv_min_eq_with(y: &MeasurementVector, mask: &Mask1D, cfg: &EqSolverConfig) -> Result<EqSolution> {
    require_zero_frequency(mask)?;
    check_dim("measurement length vs mask size", mask.m(), y.m())?;
    let n = mask.n();
    let grad_data = MeasurementVector::new(
        mask.indices()
            .iter()
            .zip(y.data())
            .map(|(&k, &v)| grad1_multiplier(k, n) * v)
            .collect(),
    );
    let w = l1_min_eq_with(&grad_data, mask, cfg)?;
    let zero_pos = mask.indices().iter().position(|&k| k == 0).expect("checked above");
    let total = y.data()[zero_pos] * (n as f64).sqrt();
    Ok(EqSolution {
        z: integrate_gradient(&w.z, total),
        iterations: w.iterations,
        converged: w.converged,
    })
}

/// `min ||grad z||_1` subject to `A z = y` solved directly by ADMM on the
/// split `w = grad z`, starting from `w = u = 0`. The z-step keeps the
/// measured frequencies and fills the others by dividing out the gradient
/// multiplier.
pub fn tv_min_eq_direct(y: &MeasurementVector, mask: &Mask1D, cfg: &EqSolverConfig) -> Result<EqSolution> {
    require_zero_frequency(mask)?;
    check_dim("measurement length vs mask size", mask.m(), y.m())?;
    let n = mask.n();
    let fft = Fft1::new(n);
    let mult: Vec<Complex64> = (0..n)
        .map(|b| grad1_multiplier(centered_index(b, n), n))
        .collect();
    let bins = mask.fft_bins();
    let mut measured = vec![None; n];
    for (&b, &v) in bins.iter().zip(y.data()) {
        measured[b] = Some(v);
    }
    let op = SubsampledFourier1D::new(mask);
    let start = op.pseudoinverse(y)?;
    let g0 = grad1(&start);
    let scale = g0.norm_inf();
    if scale == 0.0 {
        return Ok(EqSolution {
            z: start,
            iterations: 0,
            converged: true,
        });
    }
    let t = cfg.threshold_factor * scale;
    let mut w = Signal1D::zeros(n);
    let mut u = Signal1D::zeros(n);
    let mut z = start;
    for it in 1..=cfg.max_iterations {
        let mut spec = w.sub(&u)?.into_vec();
        fft.forward_in_place(&mut spec);
        for b in 0..n {
            spec[b] = match measured[b] {
                Some(v) => v,
                None => spec[b] / mult[b],
            };
        }
        fft.inverse_in_place(&mut spec);
        z = Signal1D::new(spec);
        let gz = grad1(&z);
        let w_prev = std::mem::replace(
            &mut w,
            Signal1D::new(gz.data().iter().zip(u.data()).map(|(a, b)| soft_threshold(a + b, t)).collect()),
        );
        let primal = gz.sub(&w)?;
        u = u.add(&primal)?;
        let dual = w.sub(&w_prev)?.norm2();
        let size = gz.norm2().max(w.norm2());
        if primal.norm2() <= cfg.tolerance * size && dual <= cfg.tolerance * size {
            return Ok(EqSolution {
                z,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(EqSolution {
        z,
        iterations: cfg.max_iterations,
        converged: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryMode {
    L1,
    Tv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrial {
    pub n: usize,
    /// Sparsity of the signal (l1) or of its gradient (tv).
    pub s: usize,
    /// Number of random frequencies; tv mode adds the zero frequency.
    pub m: usize,
    pub trials: usize,
    /// Recovery counts when `||z - x||_inf` is below this.
    pub failure_tolerance: f64,
    pub mode: RecoveryMode,
    pub min_magnitude: f64,
    pub seed: u64,
}

impl RecoveryTrial {
    pub fn new(mode: RecoveryMode, n: usize, s: usize, m: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            s,
            m,
            trials,
            failure_tolerance: 1e-3,
            mode,
            min_magnitude: 0.5,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub error: f64,
    pub spiked_error: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub trial: RecoveryTrial,
    pub outcomes: Vec<TrialOutcome>,
    pub rate: f64,
    /// Recovery rate of `x + delta`, the signal carrying the spike artifact.
    pub spiked_rate: f64,
}

/// Monte Carlo estimate of the exact-recovery probability.
///
/// Trial `i` draws its signal and mask from the stream `derive_seed(seed, i)`,
/// so the rates do not depend on scheduling.
pub fn recovery_experiment(trial: &RecoveryTrial) -> Result<RecoveryReport> {
    if trial.trials == 0 {
        return Err(Error::InvalidParameter("recovery experiment needs at least one trial".into()));
    }
    if !(trial.failure_tolerance > 0.0) {
        return Err(Error::InvalidParameter("failure tolerance must be positive".into()));
    }
    let spec = SparseSpec1D {
        n: trial.n,
        s: trial.s,
        mode: match trial.mode {
            RecoveryMode::L1 => SignalMode::SpikeTrain,
            RecoveryMode::Tv => SignalMode::PiecewiseConstant,
        },
        min_magnitude: trial.min_magnitude,
        seed: trial.seed,
    };
    let outcomes: Vec<TrialOutcome> = (0..trial.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(trial.seed, i);
            let x = gen_signal_1d_with(&spec, &mut rng)?;
            let mut mask = Mask1D::random(trial.n, trial.m, &mut rng)?;
            if trial.mode == RecoveryMode::Tv {
                mask = mask.with_zero();
            }
            let spiked = x.add(&Signal1D::spike(trial.n))?;
            let (error, c1) = recover_error(&x, &mask, trial.mode)?;
            let (spiked_error, c2) = recover_error(&spiked, &mask, trial.mode)?;
            Ok(TrialOutcome {
                error,
                spiked_error,
                converged: c1 && c2,
            })
        })
        .collect::<Result<_>>()?;
    let count = |f: &dyn Fn(&TrialOutcome) -> f64| {
        outcomes.iter().filter(|o| f(o) < trial.failure_tolerance).count() as f64 / outcomes.len() as f64
    };
    let rate = count(&|o| o.error);
    let spiked_rate = count(&|o| o.spiked_error);
    Ok(RecoveryReport {
        trial: trial.clone(),
        outcomes,
        rate,
        spiked_rate,
    })
}

fn recover_error(x: &Signal1D, mask: &Mask1D, mode: RecoveryMode) -> Result<(f64, bool)> {
    let y = SubsampledFourier1D::new(mask).forward(x)?;
    let sol = match mode {
        RecoveryMode::L1 => l1_min_eq(&y, mask)?,
        RecoveryMode::Tv => tv_min_eq(&y, mask)?,
    };
    Ok((sol.z.sub(x)?.norm_inf(), sol.converged))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactBound {
    /// `(||rho||_inf / ||rho||_1) (n / m)`.
    pub lower_bound: f64,
    /// `||rho||_inf / ||A^dagger A rho||_inf`.
    pub achieved: f64,
}

/// Amplification of an artifact `rho` over its visible part `A^dagger A rho`,
/// together with the triangle-inequality lower bound.
pub fn artifact_bound(rho: &Signal1D, mask: &Mask1D) -> Result<ArtifactBound> {
    check_dim("artifact length vs mask length", mask.n(), rho.n())?;
    if rho.norm_inf() == 0.0 {
        return Err(Error::ZeroDenominator("artifact bound of a zero artifact"));
    }
    let r = SubsampledFourier1D::new(mask).project(rho)?;
    if r.norm_inf() == 0.0 {
        return Err(Error::ZeroDenominator("artifact lies in the kernel of the operator"));
    }
    let n = mask.n() as f64;
    let m = mask.m() as f64;
    let lower_bound = rho.norm_inf() / rho.norm1() * (n / m);
    let achieved = rho.norm_inf() / r.norm_inf();
    if achieved < lower_bound * (1.0 - IDENTITY_TOL) {
        return Err(Error::Invariant(format!(
            "achieved amplification {achieved} below the bound {lower_bound}"
        )));
    }
    Ok(ArtifactBound { lower_bound, achieved })
}
