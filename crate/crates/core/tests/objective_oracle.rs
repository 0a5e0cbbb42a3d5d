//! The attack objective against a straight-line reimplementation of the
//! unrolled ADMM iteration that uses a dense DFT matrix, explicit finite
//! differences and conjugate gradients for the quadratic step.

use std::f64::consts::PI;

use advmri::attack::{attack_objective, disk_weight, AttackConfig};
use advmri::phantom::{gen_phantom, PhantomSpec};
use advmri::transforms::{forward, SamplingMask};
use advmri::{Image, MeasurementVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

struct Dense {
    n: usize,
    f: Vec<Vec<C>>,
    keep: Vec<bool>,
    order: Vec<usize>,
}

impl Dense {
    fn new(mask: &SamplingMask) -> Self {
        let n = mask.n();
        let nn = n * n;
        let mut f = vec![vec![C::new(0.0, 0.0); nn]; nn];
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let phase = -2.0 * PI * ((k * i + l * j) % n) as f64 / n as f64;
                        f[k * n + l][i * n + j] = C::from_polar(1.0 / n as f64, phase);
                    }
                }
            }
        }
        Self {
            n,
            f,
            keep: mask.retained().to_vec(),
            order: mask.order().to_vec(),
        }
    }

    fn fwd(&self, x: &[C]) -> Vec<C> {
        self.f.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    fn adj(&self, s: &[C]) -> Vec<C> {
        let nn = s.len();
        (0..nn).map(|c| (0..nn).map(|r| self.f[r][c].conj() * s[r]).sum()).collect()
    }

    fn grad(&self, z: &[C]) -> (Vec<C>, Vec<C>) {
        let n = self.n;
        let mut dx = vec![C::new(0.0, 0.0); n * n];
        let mut dy = dx.clone();
        for i in 0..n {
            for j in 0..n {
                dx[i * n + j] = z[i * n + (j + 1) % n] - z[i * n + j];
                dy[i * n + j] = z[((i + 1) % n) * n + j] - z[i * n + j];
            }
        }
        (dx, dy)
    }

    fn grad_adj(&self, dx: &[C], dy: &[C]) -> Vec<C> {
        let n = self.n;
        let mut out = vec![C::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let here = i * n + j;
                out[i * n + (j + 1) % n] += dx[here];
                out[here] -= dx[here];
                out[((i + 1) % n) * n + j] += dy[here];
                out[here] -= dy[here];
            }
        }
        out
    }

    /// `(2 F^H P F + tau grad^* grad) z`
    fn normal(&self, z: &[C], tau: f64) -> Vec<C> {
        let mut s = self.fwd(z);
        for (v, &k) in s.iter_mut().zip(&self.keep) {
            if !k {
                *v = C::new(0.0, 0.0);
            }
        }
        let a = self.adj(&s);
        let (dx, dy) = self.grad(z);
        let l = self.grad_adj(&dx, &dy);
        a.iter().zip(&l).map(|(a, l)| 2.0 * a + tau * l).collect()
    }

    fn cg(&self, b: &[C], tau: f64) -> Vec<C> {
        let dot = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>();
        let mut x = vec![C::new(0.0, 0.0); b.len()];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut rr = dot(&r, &r).re;
        let stop = 1e-28 * rr.max(1e-300);
        for _ in 0..4 * b.len() {
            if rr <= stop {
                break;
            }
            let ap = self.normal(&p, tau);
            let alpha = rr / dot(&p, &ap).re;
            for k in 0..x.len() {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let next = dot(&r, &r).re;
            for k in 0..p.len() {
                p[k] = r[k] + (next / rr) * p[k];
            }
            rr = next;
        }
        x
    }

    fn admm(&self, y: &[C], lambda: f64, tau: f64, iters: usize) -> Vec<C> {
        let nn = self.n * self.n;
        let mut embedded = vec![C::new(0.0, 0.0); nn];
        for (&k, &v) in self.order.iter().zip(y) {
            embedded[k] = v;
        }
        let data: Vec<C> = self.adj(&embedded).into_iter().map(|v| 2.0 * v).collect();
        let zero = vec![C::new(0.0, 0.0); nn];
        let (mut wx, mut wy, mut ux, mut uy) = (zero.clone(), zero.clone(), zero.clone(), zero.clone());
        let mut z = zero;
        let t = lambda / tau;
        let shrink = |v: C| {
            let a = v.norm();
            if a <= t {
                C::new(0.0, 0.0)
            } else {
                v * ((a - t) / a)
            }
        };
        for _ in 0..iters {
            let qx: Vec<C> = wx.iter().zip(&ux).map(|(w, u)| w - u).collect();
            let qy: Vec<C> = wy.iter().zip(&uy).map(|(w, u)| w - u).collect();
            let rhs: Vec<C> = data.iter().zip(self.grad_adj(&qx, &qy)).map(|(d, g)| d + tau * g).collect();
            z = self.cg(&rhs, tau);
            let (gx, gy) = self.grad(&z);
            for k in 0..nn {
                let vx = gx[k] + ux[k];
                let vy = gy[k] + uy[k];
                wx[k] = shrink(vx);
                wy[k] = shrink(vy);
                ux[k] = vx - wx[k];
                uy[k] = vy - wy[k];
            }
        }
        z
    }
}

#[test]
fn objective_matches_dense_reimplementation() {
    let n = 16;
    let mask = SamplingMask::radial(n, 5).unwrap();
    let dense = Dense::new(&mask);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..2u64 {
        let x = gen_phantom(&PhantomSpec::new(n, 40 + seed)).unwrap();
        let y = forward(&x, &mask).unwrap();
        let scale = y.norm2().max(1.0);
        let mut cfg = AttackConfig::new(0.05 * scale, 0.01 * scale, 0.02 * scale);
        cfg.unroll_iterations = 8;
        let e = MeasurementVector::new(
            (0..mask.m())
                .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (0.01 * scale))
                .collect(),
        );
        let weight = disk_weight((6.0, 9.0), 4.0, n).unwrap();
        let got = attack_objective(&e, &y, &mask, &weight, &cfg).unwrap();

        let ye: Vec<C> = y.data().iter().zip(e.data()).map(|(a, b)| a + b).collect();
        let z1 = dense.admm(&ye, cfg.lambda, cfg.penalty, cfg.unroll_iterations);
        let z0 = dense.admm(y.data(), cfg.lambda, cfg.penalty, cfg.unroll_iterations);
        let expected = z1
            .iter()
            .zip(&z0)
            .zip(weight.data())
            .map(|((a, b), w)| ((a - b) * w.re).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(expected > 0.0);
        assert!(
            (got - expected).abs() <= 1e-9 * expected,
            "seed {seed}: {got} vs {expected}"
        );
    }
}

#[test]
fn objective_rejects_mismatched_shapes() {
    let mask = SamplingMask::radial(16, 5).unwrap();
    let y = MeasurementVector::zeros(mask.m());
    let cfg = AttackConfig::new(0.1, 0.1, 0.1);
    let weight = Image::zeros(16);
    assert!(attack_objective(&MeasurementVector::zeros(3), &y, &mask, &weight, &cfg).is_err());
    assert!(attack_objective(&y, &y, &mask, &Image::zeros(8), &cfg).is_err());
}
