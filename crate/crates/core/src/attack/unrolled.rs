//! The TV-ADMM solver as a fixed-length unrolled map `y -> z_K`, with its
//! exact reverse-mode derivative.
//!
//! Forward iteration (zero start), with `b = 2 A^* y`:
//!
//! ```text
//! z_k = Solve(b + tau grad^*(w_{k-1} - u_{k-1}))
//! v_k = grad z_k + u_{k-1}
//! w_k = S(v_k)
//! u_k = v_k - w_k
//! ```
//!
//! `Solve` is the Fourier-diagonal inverse of `2 A^*A + tau grad^*grad` and is
//! self-adjoint. `S` is the complex soft threshold; on `|v| > t` its Jacobian
//! keeps the radial component of a perturbation and scales the tangential
//! component by `1 - t/|v|`, which is a symmetric map. On `|v| <= t` the
//! Jacobian is taken to be zero.

use num_complex::Complex64;

use crate::error::{check_dim, Result};
use crate::transforms::gradient::{grad2_adjoint_into, grad2_into};
use crate::transforms::GradientField;
use crate::tv::{AdmmState, TvSolver, Workspace};
use crate::types::{Image, MeasurementVector};

/// Recorded forward pass.
pub struct Trace {
    pub z: Image,
    /// Pre-threshold values `v_1, ..., v_K`.
    pub v: Vec<GradientField>,
}

impl Trace {
    /// Smallest distance `||v| - t|` over all thresholded entries and iterations.
    pub fn kink_margin(&self, threshold: f64) -> f64 {
        self.v
            .iter()
            .flat_map(|g| g.dx.iter().chain(&g.dy))
            .map(|v| (v.norm() - threshold).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone)]
pub struct UnrolledTv {
    solver: TvSolver,
    iterations: usize,
}

impl UnrolledTv {
    pub fn new(solver: TvSolver, iterations: usize) -> Self {
        Self { solver, iterations }
    }

    pub fn solver(&self) -> &TvSolver {
        &self.solver
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn reconstruct(&self, y: &MeasurementVector) -> Result<Image> {
        Ok(self.solver.run(y, self.iterations, None)?.z)
    }

    pub fn forward_traced(&self, y: &MeasurementVector) -> Result<Trace> {
        check_dim("measurement length vs mask size", self.solver.mask().m(), y.m())?;
        let n = self.solver.n();
        let data_spec = self.solver.data_spectrum(y);
        let mut state = AdmmState::zeros(n);
        let mut ws = Workspace::new(n);
        let mut tape = Vec::with_capacity(self.iterations);
        for _ in 0..self.iterations {
            self.solver.step(&data_spec, &mut state, &mut ws, Some(&mut tape));
        }
        Ok(Trace { z: state.z, v: tape })
    }

    /// Vector-Jacobian product: given the gradient of a real function with
    /// respect to `z_K` (as `d/dRe + i d/dIm`), returns its gradient with
    /// respect to the measurements in the same convention.
    pub fn vjp(&self, trace: &Trace, z_bar: &Image) -> Result<MeasurementVector> {
        let n = self.solver.n();
        check_dim("adjoint image side", n, z_bar.n())?;
        let nn = n * n;
        let zero = Complex64::new(0.0, 0.0);
        let t = self.solver.threshold();
        let tau = self.solver.penalty();

        let mut zb = z_bar.data().to_vec();
        let mut wb = GradientField::zeros(n);
        let mut ub = GradientField::zeros(n);
        let mut vb = GradientField::zeros(n);
        let mut bb = vec![zero; nn];
        let mut tmp = vec![zero; nn];

        for v in trace.v.iter().rev() {
            // through w_k = S(v_k) and u_k = v_k - w_k
            for k in 0..nn {
                vb.dx[k] = ub.dx[k] + soft_threshold_vjp(v.dx[k], t, wb.dx[k] - ub.dx[k]);
                vb.dy[k] = ub.dy[k] + soft_threshold_vjp(v.dy[k], t, wb.dy[k] - ub.dy[k]);
            }
            // through v_k = grad z_k + u_{k-1}
            grad2_adjoint_into(&vb.dx, &vb.dy, n, &mut tmp);
            for (a, b) in zb.iter_mut().zip(&tmp) {
                *a += b;
            }
            // through z_k = Solve(b + tau grad^*(w_{k-1} - u_{k-1}))
            self.solver.solve_in_place(&mut zb);
            for (a, b) in bb.iter_mut().zip(&zb) {
                *a += b;
            }
            grad2_into(&zb, n, &mut wb.dx, &mut wb.dy);
            for k in 0..nn {
                wb.dx[k] *= tau;
                wb.dy[k] *= tau;
                ub.dx[k] = vb.dx[k] - wb.dx[k];
                ub.dy[k] = vb.dy[k] - wb.dy[k];
            }
            zb.iter_mut().for_each(|v| *v = zero);
        }

        // b = 2 A^* y, so the measurement gradient is 2 A b_bar
        let op = self.solver.operator();
        op.fft().forward_in_place(&mut bb);
        Ok(op.gather(&bb).scale(Complex64::new(2.0, 0.0)))
    }
}

/// Transpose of the soft-threshold Jacobian at `v`, applied to `g`.
#[inline]
pub(crate) fn soft_threshold_vjp(v: Complex64, t: f64, g: Complex64) -> Complex64 {
    let mag = v.norm();
    if mag <= t {
        return Complex64::new(0.0, 0.0);
    }
    let dir = v / mag;
    let proj = dir.conj() * g;
    dir * Complex64::new(proj.re, proj.im * (1.0 - t / mag))
}
