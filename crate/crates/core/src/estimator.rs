//! Modified categorical Gini covariance estimator.
//!
//! For each category `k` the degree-3 U-statistic
//!
//! ```text
//! Δ̂_k = C(n,3)⁻¹ Σ_{i<j<l} h_k(Z_i, Z_j, Z_l)
//! h_k = ⅓ [ I(min(x₁,x₂) > x₃, y₁=y₂=k) + I(min(x₂,x₃) > x₁, y₂=y₃=k)
//!         + I(min(x₁,x₃) > x₂, y₁=y₃=k) ]
//! ```
//!
//! estimates `P(min(X₁,X₂) > X₃, Y₁=Y₂=k)`, and the departure from
//! independence is `Δ̂ = Σ_k Δ̂_k / p̂_k − 1/3`.
//!
//! Two routes are provided. [`delta_k_bruteforce`] enumerates all triples
//! in `O(n³)` and is kept as the reference. [`delta_k_fast`] counts the
//! same thing from ranks: with the category-`k` values sorted as
//! `v_1 ≤ … ≤ v_m` and `R(v)` the number of observations strictly below
//! `v`, the number of satisfied indicator terms is
//! `Σ_{i<m} (m − i) R(v_i)`, so
//! `Δ̂_k = 2 Σ (m − i) R(v_i) / (n(n−1)(n−2))`.
//!
//! Comparisons are strict throughout: a tied minimum never beats the third
//! observation, and `R` counts strictly smaller values, so both routes agree
//! on tied data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{category_counts, Dataset};

/// Which implementation computes the per-category U-statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorPath {
    Brute,
    #[default]
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GiniEstimate {
    pub delta_hat: f64,
    pub delta_k: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub n: usize,
}

/// Symmetrised kernel `h_k` on one triple of `(x, category)` pairs.
pub fn kernel_sym(triple: [(f64, usize); 3], k: usize) -> f64 {
    let [(x1, y1), (x2, y2), (x3, y3)] = triple;
    let beats = |a: f64, ya: usize, b: f64, yb: usize, c: f64| -> u8 {
        u8::from(ya == k && yb == k && a.min(b) > c)
    };
    let hits = beats(x1, y1, x2, y2, x3) + beats(x2, y2, x3, y3, x1) + beats(x1, y1, x3, y3, x2);
    f64::from(hits) / 3.0
}

/// `O(n³)` reference: average of [`kernel_sym`] over all `C(n,3)` triples.
pub fn delta_k_bruteforce(d: &Dataset, k: usize) -> Result<f64> {
    d.require_n(3)?;
    check_code(d, k)?;
    let (x, y) = (d.x(), d.y());
    let n = d.n();
    let mut sum = 0.0;
    for i in 0..n - 2 {
        for j in i + 1..n - 1 {
            for l in j + 1..n {
                sum += kernel_sym([(x[i], y[i]), (x[j], y[j]), (x[l], y[l])], k);
            }
        }
    }
    let triples = (n * (n - 1) * (n - 2)) as f64 / 6.0;
    Ok(sum / triples)
}

/// Rank-counting route for a single category, `O(n log n)`.
pub fn delta_k_fast(d: &Dataset, k: usize) -> Result<f64> {
    d.require_n(3)?;
    check_code(d, k)?;

    let mut sorted = d.x().to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = d
        .x()
        .iter()
        .zip(d.y())
        .filter(|(_, &c)| c == k)
        .map(|(&v, _)| v)
        .collect();
    values.sort_by(f64::total_cmp);

    let m = values.len() as u128;
    let count: u128 = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let below = sorted.partition_point(|&s| s < v) as u128;
            (m - 1 - i as u128) * below
        })
        .sum();
    Ok(scale_count(count, d.n()))
}

pub fn estimate_delta(d: &Dataset, path: EstimatorPath) -> Result<GiniEstimate> {
    d.require_n(3)?;
    let p_hat = category_counts(d).p_hat;
    let delta_k = match path {
        EstimatorPath::Brute => (0..d.k_count())
            .map(|k| delta_k_bruteforce(d, k))
            .collect::<Result<Vec<_>>>()?,
        EstimatorPath::Fast => {
            let ranks = SortedSample::new(d.x());
            ranks
                .pair_counts(d.y(), d.k_count())
                .into_iter()
                .map(|c| scale_count(c, d.n()))
                .collect()
        }
    };
    let delta_hat = combine(&delta_k, &p_hat);
    Ok(GiniEstimate {
        delta_hat,
        delta_k,
        p_hat,
        n: d.n(),
    })
}

/// `Σ_k Δ̂_k / p̂_k − 1/3`; categories with zero weight are skipped.
pub(crate) fn combine(delta_k: &[f64], weights: &[f64]) -> f64 {
    delta_k
        .iter()
        .zip(weights)
        .filter(|(_, &p)| p > 0.0)
        .map(|(dk, p)| dk / p)
        .sum::<f64>()
        - 1.0 / 3.0
}

/// Converts a count of satisfied indicator terms into `Δ̂_k`.
pub(crate) fn scale_count(count: u128, n: usize) -> f64 {
    let n = n as f64;
    2.0 * count as f64 / (n * (n - 1.0) * (n - 2.0))
}

fn check_code(d: &Dataset, k: usize) -> Result<()> {
    if k >= d.k_count() {
        Err(Error::UnknownCategory {
            code: k,
            k_count: d.k_count(),
        })
    } else {
        Ok(())
    }
}

/// One global sort of `x` shared by every category and every relabelling
/// of `y`.
#[derive(Debug, Clone)]
pub(crate) struct SortedSample {
    /// Observation indices in ascending `x` order.
    pub order: Vec<usize>,
    /// `below[i]` = number of observations with `x` strictly below `x_i`.
    pub below: Vec<u64>,
    /// Start offsets in `order` of each run of tied values, plus `n`.
    pub runs: Vec<usize>,
}

impl SortedSample {
    pub fn new(x: &[f64]) -> Self {
        let n = x.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));

        let mut below = vec![0u64; n];
        let mut runs = Vec::new();
        let mut run_start = 0;
        for (pos, &i) in order.iter().enumerate() {
            // -0.0 and 0.0 tie under `>`, so compare with `>` not total_cmp
            if pos == 0 || x[i] > x[order[pos - 1]] {
                run_start = pos;
                runs.push(pos);
            }
            below[i] = run_start as u64;
        }
        runs.push(n);
        Self { order, below, runs }
    }

    /// Satisfied-indicator counts `C_k = Σ_{pairs in k} R(min)` for every
    /// category under the labelling `y`.
    pub fn pair_counts(&self, y: &[usize], k_count: usize) -> Vec<u128> {
        let mut size = vec![0u128; k_count];
        for &c in y {
            size[c] += 1;
        }
        let mut seen = vec![0u128; k_count];
        let mut counts = vec![0u128; k_count];
        for &i in &self.order {
            let k = y[i];
            seen[k] += 1;
            counts[k] += (size[k] - seen[k]) * u128::from(self.below[i]);
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(x: &[f64], y: &[&str]) -> Dataset {
        Dataset::from_pairs(x.iter().copied().zip(y.iter().copied())).unwrap()
    }

    const TOL: f64 = 1e-12;

    #[test]
    fn kernel_examples() {
        // a=0, b=1
        assert_eq!(kernel_sym([(1.0, 0), (2.0, 0), (3.0, 1)], 0), 0.0);
        assert!((kernel_sym([(2.0, 0), (3.0, 0), (1.0, 1)], 0) - 1.0 / 3.0).abs() < TOL);
        assert_eq!(kernel_sym([(5.0, 0), (5.0, 0), (5.0, 0)], 0), 0.0);
    }

    #[test]
    fn kernel_is_symmetric() {
        let t = [(2.0, 0), (3.0, 0), (1.0, 1)];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for p in perms {
            let v = kernel_sym([t[p[0]], t[p[1]], t[p[2]]], 0);
            assert!((v - 1.0 / 3.0).abs() < TOL);
        }
    }

    #[test]
    fn four_point_example() {
        let d = ds(&[1.0, 2.0, 3.0, 4.0], &["b", "a", "a", "a"]);
        // label "b" is code 0, "a" is code 1
        assert!((delta_k_bruteforce(&d, 1).unwrap() - 1.0 / 3.0).abs() < TOL);
        assert!((delta_k_fast(&d, 1).unwrap() - 1.0 / 3.0).abs() < TOL);
        assert_eq!(delta_k_fast(&d, 0).unwrap(), 0.0);
        for path in [EstimatorPath::Brute, EstimatorPath::Fast] {
            let e = estimate_delta(&d, path).unwrap();
            assert!((e.delta_hat - 1.0 / 9.0).abs() < TOL, "{path:?}");
        }
    }

    #[test]
    fn three_point_example() {
        let d = ds(&[1.0, 2.0, 3.0], &["a", "a", "b"]);
        assert_eq!(delta_k_bruteforce(&d, 1).unwrap(), 0.0);
        let e = estimate_delta(&d, EstimatorPath::Brute).unwrap();
        assert!((e.delta_hat + 1.0 / 3.0).abs() < TOL);
        let e = estimate_delta(&d, EstimatorPath::Fast).unwrap();
        assert!((e.delta_hat + 1.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn single_category_is_exactly_zero() {
        let d = Dataset::from_pairs((0..9).map(|i| ((i * 7 % 9) as f64, "k"))).unwrap();
        let e = estimate_delta(&d, EstimatorPath::Fast).unwrap();
        assert_eq!(e.delta_k, vec![1.0 / 3.0]);
        assert_eq!(e.delta_hat, 0.0);
        assert!((delta_k_bruteforce(&d, 0).unwrap() - 1.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn singleton_category_contributes_zero() {
        let d = ds(&[0.5, 1.5, 2.5, 3.5, 0.1], &["a", "a", "a", "a", "b"]);
        assert_eq!(delta_k_fast(&d, 1).unwrap(), 0.0);
        assert_eq!(delta_k_bruteforce(&d, 1).unwrap(), 0.0);
    }

    #[test]
    fn ties_agree() {
        let d = ds(
            &[1.0, 1.0, 2.0, 2.0, 2.0, 3.0, 1.0, 3.0],
            &["a", "b", "a", "a", "b", "b", "a", "a"],
        );
        for k in 0..2 {
            let b = delta_k_bruteforce(&d, k).unwrap();
            let f = delta_k_fast(&d, k).unwrap();
            assert!((b - f).abs() < TOL, "k={k}: {b} vs {f}");
        }
    }

    #[test]
    fn too_small() {
        let d = ds(&[1.0, 2.0], &["a", "b"]);
        assert_eq!(
            estimate_delta(&d, EstimatorPath::Fast),
            Err(Error::SampleTooSmall { needed: 3, got: 2 })
        );
        assert!(delta_k_bruteforce(&d, 0).is_err());
    }

    #[test]
    fn unknown_category() {
        let d = ds(&[1.0, 2.0, 3.0], &["a", "a", "b"]);
        assert!(matches!(
            delta_k_fast(&d, 5),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn sorted_sample_ranks() {
        let s = SortedSample::new(&[3.0, 1.0, 3.0, 2.0, -0.0, 0.0]);
        assert_eq!(s.below, vec![4, 2, 4, 3, 0, 0]);
        assert_eq!(s.runs, vec![0, 2, 3, 4, 6]);
    }
}
