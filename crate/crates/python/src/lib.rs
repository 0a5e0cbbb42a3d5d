//! Python bindings: images, masks, the forward operator, TV reconstruction,
//! the localized attack and the 1D constructions.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use advmri::attack::{self, AttackConfig};
use advmri::phantom::{gen_phantom, PhantomSpec};
use advmri::report;
use advmri::theory::{self, RecoveryMode, RecoveryTrial};
use advmri::transforms::{self, Mask1D, SamplingMask};
use advmri::tv::{self, ReconConfig};
use advmri::MeasurementVector;

fn err(e: advmri::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Square complex image stored row-major.
#[pyclass(name = "Image", module = "advmri_py", skip_from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: advmri::Image,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(n: usize, data: Vec<Complex64>) -> PyResult<Self> {
        Ok(Self {
            inner: advmri::Image::from_vec(n, data).map_err(err)?,
        })
    }

    #[staticmethod]
    fn zeros(n: usize) -> Self {
        Self {
            inner: advmri::Image::zeros(n),
        }
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: report::read_image(path.as_ref()).map_err(err)?,
        })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        report::write_image(path.as_ref(), &self.inner).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn data(&self) -> Vec<Complex64> {
        self.inner.data().to_vec()
    }

    fn modulus(&self) -> Vec<f64> {
        self.inner.modulus()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<Complex64> {
        if row >= self.inner.n() || col >= self.inner.n() {
            return Err(PyValueError::new_err("pixel index out of range"));
        }
        Ok(self.inner.get(row, col))
    }

    fn norm2(&self) -> f64 {
        self.inner.norm2()
    }

    fn norm_inf(&self) -> f64 {
        self.inner.norm_inf()
    }

    fn __sub__(&self, other: &PyImage) -> PyResult<PyImage> {
        Ok(Self {
            inner: self.inner.sub(&other.inner).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Image(n={}, norm2={:.6e})", self.inner.n(), self.inner.norm2())
    }
}

/// Set of retained 2D frequencies.
#[pyclass(name = "Mask", module = "advmri_py", skip_from_py_object)]
#[derive(Clone)]
struct PyMask {
    inner: SamplingMask,
}

#[pymethods]
impl PyMask {
    #[staticmethod]
    fn radial(n: usize, lines: usize) -> PyResult<Self> {
        Ok(Self {
            inner: SamplingMask::radial(n, lines).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, m, seed=0))]
    fn random(n: usize, m: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: SamplingMask::random(n, m, &mut advmri::seed::rng_for(seed, 0)).map_err(err)?,
        })
    }

    #[staticmethod]
    fn full(n: usize) -> Self {
        Self {
            inner: SamplingMask::full(n),
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn fraction(&self) -> f64 {
        self.inner.fraction()
    }

    fn subsampling_factor(&self) -> f64 {
        self.inner.subsampling_factor()
    }

    /// Retained frequencies as centered (row, col) pairs, in measurement order.
    fn frequencies(&self) -> Vec<(isize, isize)> {
        self.inner.centered_indices()
    }

    fn __repr__(&self) -> String {
        format!("Mask(n={}, m={})", self.inner.n(), self.inner.m())
    }
}

#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn phantom(n: usize, seed: u64) -> PyResult<PyImage> {
    Ok(PyImage {
        inner: gen_phantom(&PhantomSpec::new(n, seed)).map_err(err)?,
    })
}

#[pyfunction]
fn forward(img: &PyImage, mask: &PyMask) -> PyResult<Vec<Complex64>> {
    Ok(transforms::forward(&img.inner, &mask.inner).map_err(err)?.into_vec())
}

#[pyfunction]
fn pseudoinverse(y: Vec<Complex64>, mask: &PyMask) -> PyResult<PyImage> {
    Ok(PyImage {
        inner: transforms::pseudoinverse(&MeasurementVector::new(y), &mask.inner).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (y, mask, lam, penalty=None, iterations=200))]
fn reconstruct_tv(y: Vec<Complex64>, mask: &PyMask, lam: f64, penalty: Option<f64>, iterations: usize) -> PyResult<PyImage> {
    let cfg = ReconConfig::new(lam, penalty.unwrap_or(lam), iterations);
    Ok(PyImage {
        inner: tv::reconstruct_tv(&MeasurementVector::new(y), &mask.inner, &cfg).map_err(err)?,
    })
}

#[pyfunction]
fn amplification(r: &PyImage, rho: &PyImage) -> PyResult<f64> {
    attack::amplification(&r.inner, &rho.inner).map_err(err)
}

/// Runs the grid attack and returns a dict with `e`, `r`, `rho`, `mu`,
/// `alpha`, the norms and the per-center scores.
#[pyfunction]
#[pyo3(signature = (y, mask, eta, lam, penalty=None, grid=(8, 8), sigma=5.0, steps=30, step_size=0.25, unroll=50, iterations=200, seed=0))]
#[allow(clippy::too_many_arguments)]
fn attack_grid<'py>(
    py: Python<'py>,
    y: Vec<Complex64>,
    mask: &PyMask,
    eta: f64,
    lam: f64,
    penalty: Option<f64>,
    grid: (usize, usize),
    sigma: f64,
    steps: usize,
    step_size: f64,
    unroll: usize,
    iterations: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = AttackConfig {
        eta,
        steps,
        step_size,
        grid,
        sigma,
        unroll_iterations: unroll,
        eval_iterations: iterations,
        lambda: lam,
        penalty: penalty.unwrap_or(lam),
        seed,
    };
    let y = MeasurementVector::new(y);
    let res = py
        .detach(|| attack::attack_grid(&y, &mask.inner, &cfg))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("e", res.e.into_vec())?;
    d.set_item("r", PyImage { inner: res.r })?;
    d.set_item("rho", PyImage { inner: res.rho })?;
    d.set_item("reconstruction", PyImage { inner: res.reconstruction })?;
    d.set_item("perturbed_reconstruction", PyImage { inner: res.perturbed_reconstruction })?;
    d.set_item("mu", res.mu)?;
    d.set_item("alpha", res.alpha)?;
    d.set_item("e_norm", res.norms.e_l2)?;
    d.set_item("r_norm", res.norms.r_l2)?;
    d.set_item("r_inf", res.norms.r_linf)?;
    d.set_item("rho_inf", res.norms.rho_linf)?;
    d.set_item("per_center_scores", res.per_center_scores)?;
    d.set_item("stalled", res.stalled)?;
    Ok(d)
}

/// Spike perturbation for the 1D mask with the given centered frequencies.
#[pyfunction]
fn spike_attack<'py>(py: Python<'py>, n: usize, frequencies: Vec<isize>) -> PyResult<Bound<'py, PyDict>> {
    let mask = Mask1D::new(n, frequencies).map_err(err)?;
    let att = theory::spike_attack(&mask).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", att.alpha)?;
    d.set_item("e", att.e.into_vec())?;
    d.set_item("r", att.r.into_vec())?;
    d.set_item("m", mask.m())?;
    Ok(d)
}

/// Returns `(rate, spiked_rate)`.
#[pyfunction]
#[pyo3(signature = (mode, n, s, m, trials, seed=0, tolerance=1e-3))]
fn recovery_experiment(py: Python<'_>, mode: &str, n: usize, s: usize, m: usize, trials: usize, seed: u64, tolerance: f64) -> PyResult<(f64, f64)> {
    let mode = match mode {
        "l1" => RecoveryMode::L1,
        "tv" => RecoveryMode::Tv,
        other => return Err(PyValueError::new_err(format!("mode must be 'l1' or 'tv', got {other:?}"))),
    };
    let trial = RecoveryTrial {
        failure_tolerance: tolerance,
        ..RecoveryTrial::new(mode, n, s, m, trials, seed)
    };
    let rep = py.detach(|| theory::recovery_experiment(&trial)).map_err(err)?;
    Ok((rep.rate, rep.spiked_rate))
}

#[pymodule]
fn advmri_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyMask>()?;
    m.add_function(wrap_pyfunction!(phantom, m)?)?;
    m.add_function(wrap_pyfunction!(forward, m)?)?;
    m.add_function(wrap_pyfunction!(pseudoinverse, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_tv, m)?)?;
    m.add_function(wrap_pyfunction!(amplification, m)?)?;
    m.add_function(wrap_pyfunction!(attack_grid, m)?)?;
    m.add_function(wrap_pyfunction!(spike_attack, m)?)?;
    m.add_function(wrap_pyfunction!(recovery_experiment, m)?)?;
    Ok(())
}
