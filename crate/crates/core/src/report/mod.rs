//! File formats and experiment reporting.

pub mod cfi;
pub mod manifest;
pub mod render;
pub mod results;
pub mod table;

pub use cfi::{read_cfi, read_image, read_mask, read_measurements, write_cfi, write_image, write_mask, write_measurements, CfiArray};
pub use manifest::{sha256_file, ExperimentManifest};
pub use render::{render_ppm, write_ppm};
pub use results::{append_rows, read_rows, ResultRow};
pub use table::{aggregate, TableCell};
