//! Aggregation of result rows into mean and standard deviation of the
//! amplification, one row per noise level and one column per mask.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::results::ResultRow;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub lines: usize,
    pub noise_rel: f64,
    pub count: usize,
    pub mean_alpha: f64,
    /// Sample standard deviation (divisor `count - 1`), 0 for a single row.
    pub std_alpha: f64,
}

/// Groups by `(lines, noise_rel)`; cells come out sorted by noise, then lines.
pub fn aggregate(rows: &[ResultRow]) -> Result<Vec<TableCell>> {
    if rows.is_empty() {
        return Err(Error::Empty("result rows"));
    }
    let mut keys: Vec<(u64, usize)> = rows.iter().map(|r| (r.noise_rel.to_bits(), r.lines)).collect();
    keys.sort_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)).then(a.1.cmp(&b.1)));
    keys.dedup();
    Ok(keys
        .into_iter()
        .map(|(noise_bits, lines)| {
            let alphas: Vec<f64> = rows
                .iter()
                .filter(|r| r.lines == lines && r.noise_rel.to_bits() == noise_bits)
                .map(|r| r.alpha)
                .collect();
            let count = alphas.len();
            let mean = alphas.iter().sum::<f64>() / count as f64;
            let var = if count > 1 {
                alphas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (count - 1) as f64
            } else {
                0.0
            };
            TableCell {
                lines,
                noise_rel: f64::from_bits(noise_bits),
                count,
                mean_alpha: mean,
                std_alpha: var.sqrt(),
            }
        })
        .collect())
}

pub fn to_markdown(cells: &[TableCell]) -> String {
    let lines: BTreeSet<usize> = cells.iter().map(|c| c.lines).collect();
    let mut noises: Vec<f64> = cells.iter().map(|c| c.noise_rel).collect();
    noises.dedup();
    let mut out = String::from("| noise |");
    for l in &lines {
        out.push_str(&format!(" {l} lines |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(lines.len()));
    out.push('\n');
    for noise in noises {
        out.push_str(&format!("| {:.1}% |", noise * 100.0));
        for l in &lines {
            match cells.iter().find(|c| c.lines == *l && c.noise_rel == noise) {
                Some(c) => out.push_str(&format!(" {:.2} ± {:.2} |", c.mean_alpha, c.std_alpha)),
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn to_csv(cells: &[TableCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lines", "noise_rel", "count", "mean_alpha", "std_alpha"])?;
    for c in cells {
        w.write_record([
            c.lines.to_string(),
            super::results::format_float(c.noise_rel),
            c.count.to_string(),
            super::results::format_float(c.mean_alpha),
            super::results::format_float(c.std_alpha),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lines: usize, noise: f64, alpha: f64) -> ResultRow {
        ResultRow {
            image_id: String::new(),
            lines,
            m: 1,
            n: 8,
            noise_rel: noise,
            mu: (1.0, 1.0),
            sigma: 5.0,
            e_norm: 1.0,
            r_inf: 1.0,
            rho_inf: alpha,
            alpha,
            wall_time: None,
        }
    }

    #[test]
    fn single_row() {
        let t = aggregate(&[row(40, 0.04, 3.7)]).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].mean_alpha, 3.7);
        assert_eq!(t[0].std_alpha, 0.0);
    }

    #[test]
    fn two_rows_std() {
        let t = aggregate(&[row(40, 0.04, 4.0), row(40, 0.04, 6.0)]).unwrap();
        assert_eq!(t[0].mean_alpha, 5.0);
        assert!((t[0].std_alpha - 2f64.sqrt()).abs() < 1e-12);
        assert!(to_markdown(&t).contains("5.00 ± 1.41"));
    }

    #[test]
    fn layout_and_empty_input() {
        let rows = [row(25, 0.01, 9.0), row(80, 0.01, 3.0), row(25, 0.005, 8.0)];
        let t = aggregate(&rows).unwrap();
        assert_eq!(t.iter().map(|c| (c.lines, c.noise_rel)).collect::<Vec<_>>(), vec![(25, 0.005), (25, 0.01), (80, 0.01)]);
        let md = to_markdown(&t);
        assert!(md.starts_with("| noise | 25 lines | 80 lines |"));
        assert!(md.contains("| 0.5% | 8.00 ± 0.00 | - |"));
        assert!(aggregate(&[]).is_err());
        assert_eq!(to_csv(&t).unwrap().lines().count(), 4);
    }
}
