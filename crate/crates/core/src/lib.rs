//! Localized adversarial perturbations for total-variation regularized
//! compressed-sensing MRI.
//!
//! The crate covers the subsampled Fourier model, an ADMM solver for
//! TV-regularized reconstruction, a projected-gradient attack that
//! differentiates through the unrolled solver, the one-dimensional spike
//! constructions and exact-recovery experiments that explain the observed
//! artifacts, and the file formats used by the `advmri` command line tool.

pub mod attack;
pub mod error;
pub mod seed;
pub mod transforms;
pub mod phantom;
pub mod report;
pub mod theory;
pub mod tv;
pub mod types;

pub use error::{Error, Result};
pub use types::{Image, MeasurementVector, Signal1D};
