//! Per-category Gaussian kernel density series.

use catgini::Dataset;
use serde::Serialize;

use crate::error::{CliError, Result};

pub const GRID_POINTS: usize = 256;

/// The shared grid extends this many (largest) bandwidths past the data
/// range so each series carries essentially all of its mass.
const TAIL_BANDWIDTHS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySeries {
    pub category: String,
    pub count: usize,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

/// Type-7 sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9 · min(s, IQR/1.34) · m^(−1/5)`, falling back to
/// `s` when the IQR is zero.
pub fn silverman_bandwidth(values: &[f64], category: &str) -> Result<f64> {
    let degenerate = |reason: &str| CliError::DegenerateBandwidth {
        category: category.to_string(),
        reason: reason.to_string(),
    };
    let m = values.len();
    if m < 2 {
        return Err(degenerate("fewer than two observations"));
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = match sd.min(iqr / 1.34) {
        s if s > 0.0 => s,
        _ => sd,
    };
    if spread.is_nan() || spread <= 0.0 {
        return Err(degenerate("all observations are equal"));
    }
    Ok(0.9 * spread * (m as f64).powf(-0.2))
}

pub fn density_series(d: &Dataset, grid_points: usize) -> Result<Vec<DensitySeries>> {
    if grid_points < 2 {
        return Err(catgini::Error::InvalidSpec(format!(
            "grid needs at least 2 points, got {grid_points}"
        ))
        .into());
    }
    let groups: Vec<Vec<f64>> = (0..d.k_count())
        .map(|k| {
            d.x()
                .iter()
                .zip(d.y())
                .filter(|&(_, &c)| c == k)
                .map(|(&x, _)| x)
                .collect()
        })
        .collect();
    let bandwidths = groups
        .iter()
        .zip(d.labels())
        .map(|(g, label)| silverman_bandwidth(g, label))
        .collect::<Result<Vec<_>>>()?;

    let (min, max) = d
        .x()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let pad = TAIL_BANDWIDTHS * bandwidths.iter().cloned().fold(0.0, f64::max);
    let (lo, hi) = (min - pad, max + pad);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|i| lo + step * i as f64).collect();

    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    Ok(groups
        .iter()
        .zip(&bandwidths)
        .zip(d.labels())
        .map(|((values, &h), label)| {
            let scale = norm / (h * values.len() as f64);
            let density = grid
                .iter()
                .map(|&g| {
                    scale
                        * values
                            .iter()
                            .map(|&v| (-0.5 * ((g - v) / h).powi(2)).exp())
                            .sum::<f64>()
                })
                .collect();
            DensitySeries {
                category: label.clone(),
                count: values.len(),
                bandwidth: h,
                grid: grid.clone(),
                density,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&v, 0.5), 2.5);
    }

    #[test]
    fn zero_iqr_falls_back_to_sd() {
        let h = silverman_bandwidth(&[1.0, 1.0, 1.0, 1.0, 5.0], "a").unwrap();
        assert!(h > 0.0);
    }

    #[test]
    fn degenerate_groups_name_the_category() {
        let e = silverman_bandwidth(&[2.0], "lonely").unwrap_err();
        assert!(e.to_string().contains("lonely"));
        let e = silverman_bandwidth(&[2.0, 2.0], "flat").unwrap_err();
        assert!(e.to_string().contains("flat"));
    }
}
