//! Per-attack result rows.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! every value parses back exactly.

use std::fs::OpenOptions;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER: [&str; 13] = [
    "image_id", "lines", "m", "n", "noise_rel", "mu_row", "mu_col", "sigma", "e_norm", "r_inf", "rho_inf", "alpha",
    "wall_time",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub image_id: String,
    pub lines: usize,
    pub m: usize,
    pub n: usize,
    pub noise_rel: f64,
    pub mu: (f64, f64),
    pub sigma: f64,
    pub e_norm: f64,
    pub r_inf: f64,
    pub rho_inf: f64,
    pub alpha: f64,
    /// Seconds; left empty unless timing was requested, keeping files reproducible.
    pub wall_time: Option<f64>,
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl ResultRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.image_id.clone(),
            self.lines.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            format_float(self.noise_rel),
            format_float(self.mu.0),
            format_float(self.mu.1),
            format_float(self.sigma),
            format_float(self.e_norm),
            format_float(self.r_inf),
            format_float(self.rho_inf),
            format_float(self.alpha),
            self.wall_time.map(format_float).unwrap_or_default(),
        ]
    }

    fn parse(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != HEADER.len() {
            return Err(Error::Format(format!("result row has {} fields, expected {}", rec.len(), HEADER.len())));
        }
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("column {} is not a number: {:?}", HEADER[i], &rec[i])))
        };
        let u = |i: usize| -> Result<usize> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("column {} is not an integer: {:?}", HEADER[i], &rec[i])))
        };
        Ok(Self {
            image_id: rec[0].to_string(),
            lines: u(1)?,
            m: u(2)?,
            n: u(3)?,
            noise_rel: f(4)?,
            mu: (f(5)?, f(6)?),
            sigma: f(7)?,
            e_norm: f(8)?,
            r_inf: f(9)?,
            rho_inf: f(10)?,
            alpha: f(11)?,
            wall_time: if rec[12].trim().is_empty() { None } else { Some(f(12)?) },
        })
    }
}

/// Appends rows, writing the header first if the file is new or empty.
pub fn append_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(HEADER)?;
    }
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Format(format!("{} does not have the result header", path.display())));
    }
    r.records().map(|rec| ResultRow::parse(&rec?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(alpha: f64) -> ResultRow {
        ResultRow {
            image_id: "phantom_0003".into(),
            lines: 20,
            m: 1288,
            n: 64,
            noise_rel: 0.04,
            mu: (8.875, 40.375),
            sigma: 5.0,
            e_norm: 0.1 + 0.2,
            r_inf: 1.0 / 3.0,
            rho_inf: std::f64::consts::PI,
            alpha,
            wall_time: None,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("results.csv");
        append_rows(&p, &[row(4.0)]).unwrap();
        let mut timed = row(6.123456789012345);
        timed.wall_time = Some(1.5);
        append_rows(&p, &[timed.clone()]).unwrap();
        let back = read_rows(&p).unwrap();
        assert_eq!(back, vec![row(4.0), timed]);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(4.0), "4.0000000000000000e0");
    }
}
