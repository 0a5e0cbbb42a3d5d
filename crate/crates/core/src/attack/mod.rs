//! Localized adversarial perturbations of undersampled Fourier measurements.
//!
//! For a disk weight `phi` centered at `mu`, the attack maximizes
//! `||phi (.) (rec(y + e) - rec(y))||_2` over `||e||_2 <= eta` by projected
//! gradient ascent through the unrolled TV solver, repeats this for every
//! center on a regular grid, and keeps the perturbation whose artifact has
//! the largest l-infinity norm.

mod unrolled;

pub use unrolled::{Trace, UnrolledTv};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seed::rng_for;
use crate::transforms::SamplingMask;
use crate::tv::TvSolver;
use crate::types::{Image, MeasurementVector};

/// Indicator of the disk `(i - mu1)^2 + (j - mu2)^2 <= sigma^2` over 1-based
/// pixel coordinates `i, j = 1..n` (row, column).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskWeight {
    pub center: (f64, f64),
    pub sigma: f64,
    pub n: usize,
}

impl DiskWeight {
    pub fn new(center: (f64, f64), sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("disk radius must be positive, got {sigma}")));
        }
        let range = 1.0..=n as f64;
        if !(range.contains(&center.0) && range.contains(&center.1)) {
            return Err(Error::InvalidParameter(format!(
                "disk center ({}, {}) outside [1, {n}]^2",
                center.0, center.1
            )));
        }
        Ok(Self { center, sigma, n })
    }

    pub fn image(&self) -> Image {
        let n = self.n;
        let r2 = self.sigma * self.sigma;
        let mut img = Image::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let di = (i + 1) as f64 - self.center.0;
                let dj = (j + 1) as f64 - self.center.1;
                if di * di + dj * dj <= r2 {
                    img.set(i, j, Complex64::new(1.0, 0.0));
                }
            }
        }
        img
    }
}

pub fn disk_weight(center: (f64, f64), sigma: f64, n: usize) -> Result<Image> {
    Ok(DiskWeight::new(center, sigma, n)?.image())
}

/// Cell midpoints `1 + (n - 1)(2k - 1) / (2g)`, `k = 1..g`, in row-major order.
pub fn grid_centers(n: usize, grid: (usize, usize)) -> Vec<(f64, f64)> {
    let axis = |g: usize| -> Vec<f64> {
        (1..=g)
            .map(|k| 1.0 + (n as f64 - 1.0) * (2 * k - 1) as f64 / (2 * g) as f64)
            .collect()
    };
    let rows = axis(grid.0);
    let cols = axis(grid.1);
    rows.iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect()
}

/// `||rho||_inf / ||r||_inf` on entrywise moduli.
pub fn amplification(r: &Image, rho: &Image) -> Result<f64> {
    let denom = r.norm_inf();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator("amplification factor (||r||_inf = 0)"));
    }
    Ok(rho.norm_inf() / denom)
}

/// The localized objective `e -> ||phi (.) (rec_K(y + e) - rec_K(y))||_2` for a fixed
/// `y`, weight and unrolled solver. `rec_K(y)` is computed once.
pub struct AttackObjective {
    y: MeasurementVector,
    unrolled: UnrolledTv,
    weight: Image,
    reference: Image,
}

impl AttackObjective {
    pub fn new(y: &MeasurementVector, unrolled: UnrolledTv, weight: Image) -> Result<Self> {
        check_dim("weight side vs mask side", unrolled.solver().n(), weight.n())?;
        let reference = unrolled.reconstruct(y)?;
        Ok(Self::with_reference(y, unrolled, weight, reference))
    }

    pub(crate) fn with_reference(y: &MeasurementVector, unrolled: UnrolledTv, weight: Image, reference: Image) -> Self {
        Self {
            y: y.clone(),
            unrolled,
            weight,
            reference,
        }
    }

    pub fn unrolled(&self) -> &UnrolledTv {
        &self.unrolled
    }

    fn perturbed(&self, e: &MeasurementVector) -> Result<MeasurementVector> {
        check_dim("perturbation length", self.y.m(), e.m())?;
        self.y.add(e)
    }

    pub fn value(&self, e: &MeasurementVector) -> Result<f64> {
        let z = self.unrolled.reconstruct(&self.perturbed(e)?)?;
        Ok(z.sub(&self.reference)?.weighted(&self.weight)?.norm2())
    }

    /// Objective value and its ascent direction `dJ/dRe(e) + i dJ/dIm(e)`.
    pub fn value_and_gradient(&self, e: &MeasurementVector) -> Result<(f64, MeasurementVector)> {
        let trace = self.unrolled.forward_traced(&self.perturbed(e)?)?;
        self.finish(&trace)
    }

    /// Like [`Self::value_and_gradient`], also returning the smallest distance of
    /// any thresholded entry to the soft-threshold kink.
    pub fn value_gradient_margin(&self, e: &MeasurementVector) -> Result<(f64, MeasurementVector, f64)> {
        let trace = self.unrolled.forward_traced(&self.perturbed(e)?)?;
        let margin = trace.kink_margin(self.unrolled.solver().threshold());
        let (value, grad) = self.finish(&trace)?;
        Ok((value, grad, margin))
    }

    fn finish(&self, trace: &Trace) -> Result<(f64, MeasurementVector)> {
        let diff = trace.z.sub(&self.reference)?.weighted(&self.weight)?;
        let value = diff.norm2();
        if value == 0.0 {
            return Ok((0.0, MeasurementVector::zeros(self.y.m())));
        }
        // d||phi (.) d||/dz = phi^2 (.) d / ||phi (.) d||
        let z_bar = diff.weighted(&self.weight)?.scale(Complex64::new(1.0 / value, 0.0));
        Ok((value, self.unrolled.vjp(trace, &z_bar)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// Absolute l2 budget for the perturbation.
    pub eta: f64,
    pub steps: usize,
    /// Step length as a fraction of `eta`.
    pub step_size: f64,
    pub grid: (usize, usize),
    pub sigma: f64,
    /// ADMM iterations inside the differentiated objective.
    pub unroll_iterations: usize,
    /// ADMM iterations for the final artifact.
    pub eval_iterations: usize,
    pub lambda: f64,
    pub penalty: f64,
    pub seed: u64,
}

impl AttackConfig {
    pub fn new(eta: f64, lambda: f64, penalty: f64) -> Self {
        Self {
            eta,
            steps: 30,
            step_size: 0.25,
            grid: (8, 8),
            sigma: 5.0,
            unroll_iterations: 50,
            eval_iterations: 200,
            lambda,
            penalty,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("budget eta must be positive, got {}", self.eta)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("attack needs at least one step".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidParameter("step size must be positive".into()));
        }
        if self.grid.0 == 0 || self.grid.1 == 0 {
            return Err(Error::InvalidParameter("grid dimensions must be at least 1x1".into()));
        }
        if self.unroll_iterations == 0 || self.eval_iterations == 0 {
            return Err(Error::InvalidParameter("iteration counts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackNorms {
    pub e_l2: f64,
    pub r_l2: f64,
    pub r_linf: f64,
    pub rho_l2: f64,
    pub rho_linf: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackResult {
    /// Adversarial perturbation with `||e||_2 = eta`.
    pub e: MeasurementVector,
    /// Image-domain representation `A^dagger e`.
    pub r: Image,
    /// Artifact `rec(y + e) - rec(y)` at evaluation quality.
    pub rho: Image,
    pub reconstruction: Image,
    pub perturbed_reconstruction: Image,
    pub mu: (f64, f64),
    pub alpha: f64,
    pub norms: AttackNorms,
    /// Best objective value seen at each ascent step (nondecreasing).
    pub best_history: Vec<f64>,
    /// `(mu, ||rho_mu||_inf)` for every center tried.
    pub per_center_scores: Vec<((f64, f64), f64)>,
    /// Set when the gradient vanished at every step.
    pub stalled: bool,
}

/// Shared read-only pieces of an attack on one measurement vector.
struct AttackContext<'a> {
    y: &'a MeasurementVector,
    cfg: &'a AttackConfig,
    unrolled: UnrolledTv,
    unrolled_reference: Image,
    eval: UnrolledTv,
    eval_reference: Image,
}

impl<'a> AttackContext<'a> {
    fn new(y: &'a MeasurementVector, mask: &SamplingMask, cfg: &'a AttackConfig) -> Result<Self> {
        cfg.validate()?;
        check_dim("measurement length vs mask size", mask.m(), y.m())?;
        let solver = TvSolver::new(mask, cfg.lambda, cfg.penalty)?;
        let unrolled = UnrolledTv::new(solver.clone(), cfg.unroll_iterations);
        let eval = UnrolledTv::new(solver, cfg.eval_iterations);
        let unrolled_reference = unrolled.reconstruct(y)?;
        let eval_reference = if cfg.eval_iterations == cfg.unroll_iterations {
            unrolled_reference.clone()
        } else {
            eval.reconstruct(y)?
        };
        Ok(Self {
            y,
            cfg,
            unrolled,
            unrolled_reference,
            eval,
            eval_reference,
        })
    }

    fn attack(&self, mu: (f64, f64)) -> Result<AttackResult> {
        let cfg = self.cfg;
        let n = self.eval.solver().n();
        let m = self.y.m();
        let weight = disk_weight(mu, cfg.sigma, n)?;
        let objective = AttackObjective::with_reference(
            self.y,
            self.unrolled.clone(),
            weight,
            self.unrolled_reference.clone(),
        );

        let stream = mu.0.to_bits() ^ mu.1.to_bits().rotate_left(32);
        let mut rng = rng_for(cfg.seed, stream);
        let mut e = random_direction(m, &mut rng).scale(Complex64::new(cfg.eta / 10.0, 0.0));

        let mut best_value = f64::NEG_INFINITY;
        let mut best_e = e.clone();
        let mut history = Vec::with_capacity(cfg.steps + 1);
        let mut zero_steps = 0;
        for _ in 0..cfg.steps {
            let (value, grad) = objective.value_and_gradient(&e)?;
            if value > best_value {
                best_value = value;
                best_e = e.clone();
            }
            history.push(best_value);
            let g_norm = grad.norm2();
            if g_norm == 0.0 {
                zero_steps += 1;
                continue;
            }
            let step = Complex64::new(cfg.step_size * cfg.eta / g_norm, 0.0);
            e = e.add(&grad.scale(step))?;
            project_to_ball(&mut e, cfg.eta);
        }
        let value = objective.value(&e)?;
        if value > best_value {
            best_value = value;
            best_e = e;
        }
        history.push(best_value);

        // the constraint is active at a maximizer
        let norm = best_e.norm2();
        if norm > 0.0 {
            best_e = best_e.scale(Complex64::new(cfg.eta / norm, 0.0));
        }
        self.evaluate(mu, best_e, history, zero_steps == cfg.steps)
    }

    fn evaluate(&self, mu: (f64, f64), e: MeasurementVector, best_history: Vec<f64>, stalled: bool) -> Result<AttackResult> {
        let perturbed = self.eval.reconstruct(&self.y.add(&e)?)?;
        let rho = perturbed.sub(&self.eval_reference)?;
        let r = self.eval.solver().operator().pseudoinverse(&e)?;
        let norms = AttackNorms {
            e_l2: e.norm2(),
            r_l2: r.norm2(),
            r_linf: r.norm_inf(),
            rho_l2: rho.norm2(),
            rho_linf: rho.norm_inf(),
        };
        let alpha = amplification(&r, &rho)?;
        Ok(AttackResult {
            e,
            r,
            rho,
            reconstruction: self.eval_reference.clone(),
            perturbed_reconstruction: perturbed,
            mu,
            alpha,
            norms,
            best_history,
            per_center_scores: vec![(mu, norms.rho_linf)],
            stalled,
        })
    }
}

fn random_direction<R: Rng + ?Sized>(m: usize, rng: &mut R) -> MeasurementVector {
    let v = MeasurementVector::new(
        (0..m)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect(),
    );
    let norm = v.norm2();
    v.scale(Complex64::new(1.0 / norm, 0.0))
}

fn project_to_ball(e: &mut MeasurementVector, radius: f64) {
    let norm = e.norm2();
    if norm > radius {
        let s = radius / norm;
        e.data_mut().iter_mut().for_each(|v| *v *= s);
    }
}

/// `||phi (.) (rec(y + e) - rec(y))||_2` with `cfg.unroll_iterations` ADMM iterations.
pub fn attack_objective(
    e: &MeasurementVector,
    y: &MeasurementVector,
    mask: &SamplingMask,
    weight: &Image,
    cfg: &AttackConfig,
) -> Result<f64> {
    objective_for(y, mask, weight, cfg)?.value(e)
}

/// Reverse-mode gradient of [`attack_objective`] with respect to `e`.
pub fn objective_gradient(
    e: &MeasurementVector,
    y: &MeasurementVector,
    mask: &SamplingMask,
    weight: &Image,
    cfg: &AttackConfig,
) -> Result<MeasurementVector> {
    Ok(objective_for(y, mask, weight, cfg)?.value_and_gradient(e)?.1)
}

fn objective_for(y: &MeasurementVector, mask: &SamplingMask, weight: &Image, cfg: &AttackConfig) -> Result<AttackObjective> {
    check_dim("measurement length vs mask size", mask.m(), y.m())?;
    let solver = TvSolver::new(mask, cfg.lambda, cfg.penalty)?;
    AttackObjective::new(y, UnrolledTv::new(solver, cfg.unroll_iterations), weight.clone())
}

/// Single-center attack by projected gradient ascent.
///
/// Starts from Gaussian noise with `||e||_2 = eta / 10`, takes `steps` steps
/// of length `step_size * eta` along the normalized gradient, projecting onto
/// the `eta` ball, keeps the best iterate and rescales it onto the sphere
/// `||e||_2 = eta`. The artifact is then recomputed with `eval_iterations`.
pub fn attack_at(mu: (f64, f64), y: &MeasurementVector, mask: &SamplingMask, cfg: &AttackConfig) -> Result<AttackResult> {
    AttackContext::new(y, mask, cfg)?.attack(mu)
}

/// Runs [`attack_at`] for every center of the configured grid (in parallel) and
/// returns the result with the largest `||rho||_inf`, ties going to the first
/// center in row-major order.
pub fn attack_grid(y: &MeasurementVector, mask: &SamplingMask, cfg: &AttackConfig) -> Result<AttackResult> {
    let ctx = AttackContext::new(y, mask, cfg)?;
    let centers = grid_centers(mask.n(), cfg.grid);
    let results: Vec<AttackResult> = centers
        .par_iter()
        .map(|&mu| ctx.attack(mu))
        .collect::<Result<_>>()?;
    let scores: Vec<((f64, f64), f64)> = results.iter().map(|r| (r.mu, r.norms.rho_linf)).collect();
    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.norms.rho_linf > results[best].norms.rho_linf {
            best = k;
        }
    }
    let mut chosen = results.into_iter().nth(best).expect("grid has at least one center");
    chosen.per_center_scores = scores;
    Ok(chosen)
}
