//! Jackknife empirical likelihood ratio test of independence.
//!
//! Pseudo-values `ν_i = nΔ̂ − (n−1)Δ̂_(i)` turn the degree-3 U-statistic
//! into an approximately i.i.d. sample whose mean is `Δ̂`. Empirical
//! likelihood for the mean of the `ν_i` at zero gives
//!
//! ```text
//! −2 log R(0) = 2 Σ log(1 + λ ν_i),   (1/n) Σ ν_i / (1 + λ ν_i) = 0,
//! ```
//!
//! which is compared with the upper χ²₁ quantile.
//!
//! By default the leave-one-out estimates reuse the full-sample weights
//! `1/p̂_k`; this is what makes `mean(ν) = Δ̂` hold exactly. Recomputing
//! the weights on every subsample is available as
//! [`WeightMode::Recomputed`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{check_alpha, chi2_1_quantile, chi2_1_sf};
use crate::error::{Error, Result};
use crate::estimator::{scale_count, SortedSample};
use crate::types::{category_counts, Dataset, Tolerances};

/// Weights `1/p̂_k` used inside each leave-one-out estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Full-sample `p̂_k` for every subsample.
    #[default]
    FullSample,
    /// `p̂_k` recomputed from the `n − 1` remaining records. Breaks the
    /// identity `mean(ν) = Δ̂`.
    Recomputed,
}

/// How the `n` leave-one-out estimates are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeaveOneOut {
    /// Subtract the contribution of observation `i` from the full-sample
    /// pair counts, `O(nK)` after one sort.
    #[default]
    Downdate,
    /// Rerun the rank-counting estimator on each subsample,
    /// `O(n² log n)`.
    Rerun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JelOptions {
    pub weights: WeightMode,
    pub leave_one_out: LeaveOneOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoValues {
    pub nu: Vec<f64>,
    pub delta_hat: f64,
    pub n: usize,
}

impl PseudoValues {
    pub fn mean(&self) -> f64 {
        self.nu.iter().sum::<f64>() / self.n as f64
    }

    /// `S = (1/n) Σ ν_i²`.
    pub fn mean_square(&self) -> f64 {
        self.nu.iter().map(|v| v * v).sum::<f64>() / self.n as f64
    }
}

/// Why the EL program had no interior solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Zero is not strictly inside the pseudo-value hull; the constrained
    /// likelihood is zero and the statistic is `+∞`.
    HullViolation,
    /// Every pseudo-value is zero; the constraint is free and the
    /// statistic is `0`.
    AllZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JelResult {
    pub delta_hat: f64,
    pub n: usize,
    /// `None` when the test is degenerate.
    pub lambda: Option<f64>,
    /// `−2 log R(0)`; `+∞` on a hull violation.
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub degenerate: bool,
    pub degeneracy: Option<Degeneracy>,
}

pub fn pseudo_values(d: &Dataset) -> Result<PseudoValues> {
    pseudo_values_with(d, JelOptions::default())
}

pub fn pseudo_values_with(d: &Dataset, opts: JelOptions) -> Result<PseudoValues> {
    d.require_n(4)?;
    let n = d.n();
    let k_count = d.k_count();
    let sizes = category_counts(d).counts;
    let sorted = SortedSample::new(d.x());
    let full = sorted.pair_counts(d.y(), k_count);

    let full_weights: Vec<f64> = sizes.iter().map(|&m| n as f64 / m as f64).collect();
    let delta_hat = weighted_delta(&full, &full_weights, n);

    let loo: Vec<Vec<u128>> = match opts.leave_one_out {
        LeaveOneOut::Downdate => downdate_counts(d, &sorted, &full, &sizes),
        LeaveOneOut::Rerun => rerun_counts(d),
    };

    let nu = loo
        .iter()
        .enumerate()
        .map(|(i, counts)| match opts.weights {
            WeightMode::FullSample => pseudo_value_exact(&full, counts, &full_weights, n),
            WeightMode::Recomputed => {
                let own = d.y()[i];
                let weights: Vec<f64> = sizes
                    .iter()
                    .enumerate()
                    .map(|(k, &m)| {
                        let m = m - usize::from(k == own);
                        if m == 0 {
                            0.0
                        } else {
                            (n - 1) as f64 / m as f64
                        }
                    })
                    .collect();
                let loo_delta = weighted_delta(counts, &weights, n - 1);
                n as f64 * delta_hat - (n - 1) as f64 * loo_delta
            }
        })
        .collect();

    Ok(PseudoValues { nu, delta_hat, n })
}

/// `Σ_k w_k Δ̂_k − 1/3` from pair counts on a sample of size `n`; zero
/// weights mark categories absent from the sample.
fn weighted_delta(counts: &[u128], weights: &[f64], n: usize) -> f64 {
    counts
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&c, &w)| w * scale_count(c, n))
        .sum::<f64>()
        - 1.0 / 3.0
}

/// `ν_i` with fixed weights, combining the two U-statistics over a common
/// integer numerator so that the cancellation in `nΔ̂ − (n−1)Δ̂_(i)` is
/// exact per category.
fn pseudo_value_exact(full: &[u128], loo: &[u128], weights: &[f64], n: usize) -> f64 {
    let (a, b) = ((n - 3) as i128, (n - 1) as i128);
    let den = ((n - 1) * (n - 2) * (n - 3)) as f64;
    full.iter()
        .zip(loo)
        .zip(weights)
        .map(|((&c, &c_loo), &w)| {
            let num = a * c as i128 - b * c_loo as i128;
            w * (2.0 * num as f64 / den)
        })
        .sum::<f64>()
        - 1.0 / 3.0
}

/// Leave-one-out pair counts by downdating.
///
/// Removing observation `i` (category `c`) from the sample
/// - lowers `R(min)` by one for every pair in category `k` whose minimum
///   exceeds `x_i`: `C(G_k(x_i), 2)` pairs, with `G_k(v)` the number of
///   category-`k` values above `v`;
/// - for `k = c`, additionally drops the pairs containing `i`, worth
///   `Σ_{b ∈ c, b ≠ i} R(min(x_i, x_b))`.
fn downdate_counts(
    d: &Dataset,
    sorted: &SortedSample,
    full: &[u128],
    sizes: &[usize],
) -> Vec<Vec<u128>> {
    let y = d.y();
    let k_count = sizes.len();
    let sizes: Vec<u128> = sizes.iter().map(|&m| m as u128).collect();

    let mut below_count = vec![0u128; k_count];
    let mut below_rank_sum = vec![0u128; k_count];
    let mut out = vec![Vec::new(); d.n()];
    let mut own_loss = Vec::new();

    for run in sorted.runs.windows(2) {
        let members = &sorted.order[run[0]..run[1]];
        let rank = run[0] as u128;

        own_loss.clear();
        for &i in members {
            let c = y[i];
            let at_or_above = sizes[c] - below_count[c] - 1;
            own_loss.push(below_rank_sum[c] + at_or_above * rank);
        }
        for &i in members {
            below_count[y[i]] += 1;
            below_rank_sum[y[i]] += rank;
        }
        for (&i, &loss) in members.iter().zip(&own_loss) {
            let c = y[i];
            out[i] = (0..k_count)
                .map(|k| {
                    let above = sizes[k] - below_count[k];
                    let shifted = above * above.saturating_sub(1) / 2;
                    let own = if k == c { loss } else { 0 };
                    full[k] - shifted - own
                })
                .collect();
        }
    }
    out
}

/// Leave-one-out pair counts by recomputation on each subsample.
fn rerun_counts(d: &Dataset) -> Vec<Vec<u128>> {
    let (x, y) = (d.x(), d.y());
    (0..d.n())
        .into_par_iter()
        .map(|i| {
            let xs: Vec<f64> = x[..i].iter().chain(&x[i + 1..]).copied().collect();
            let ys: Vec<usize> = y[..i].iter().chain(&y[i + 1..]).copied().collect();
            SortedSample::new(&xs).pair_counts(&ys, d.k_count())
        })
        .collect()
}

/// `g(λ) = (1/n) Σ ν_i / (1 + λ ν_i)`.
pub fn estimating_equation(nu: &[f64], lambda: f64) -> f64 {
    nu.iter().map(|&v| v / (1.0 + lambda * v)).sum::<f64>() / nu.len() as f64
}

/// Solves `g(λ) = 0` on the feasible interval `(−1/max ν, −1/min ν)`.
///
/// `g` is strictly decreasing there, so a Newton step is accepted only
/// when it stays inside the current bracket and bisection is used
/// otherwise.
pub fn solve_lambda(nu: &[f64], tol: &Tolerances) -> Result<f64> {
    tol.validate()?;
    if nu.is_empty() {
        return Err(Error::Empty);
    }
    let (min, max) = nu
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if min == 0.0 && max == 0.0 {
        return Err(Error::AllZero);
    }
    if min >= 0.0 || max <= 0.0 {
        return Err(Error::HullViolation);
    }

    const MARGIN: f64 = 1e-12;
    let mut lo = -(1.0 - MARGIN) / max;
    let mut hi = -(1.0 - MARGIN) / min;
    let n = nu.len() as f64;
    let mut lambda = 0.0;

    for _ in 0..tol.max_root_iters {
        let (mut g, mut dg) = (0.0, 0.0);
        for &v in nu {
            let r = v / (1.0 + lambda * v);
            g += r;
            dg -= r * r;
        }
        g /= n;
        dg /= n;
        if g.abs() <= tol.root_tol {
            return Ok(lambda);
        }
        if g > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - g / dg;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == lambda {
            break;
        }
        lambda = next;
    }
    Err(Error::NoConvergence {
        iters: tol.max_root_iters,
    })
}

/// `−2 log R(0) = 2 Σ log(1 + λ ν_i)`, with round-off negatives clamped
/// to zero.
pub fn jel_statistic(nu: &[f64], lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for (i, &v) in nu.iter().enumerate() {
        let t = lambda * v;
        if (1.0 + t).is_nan() || 1.0 + t <= 0.0 {
            return Err(Error::DomainError(format!(
                "1 + λν_{i} = {} is not positive",
                1.0 + t
            )));
        }
        total += t.ln_1p();
    }
    Ok((2.0 * total).max(0.0))
}

pub fn jel_test(d: &Dataset, alpha: f64, tol: &Tolerances) -> Result<JelResult> {
    jel_test_with(d, alpha, tol, JelOptions::default())
}

pub fn jel_test_with(
    d: &Dataset,
    alpha: f64,
    tol: &Tolerances,
    opts: JelOptions,
) -> Result<JelResult> {
    check_alpha(alpha)?;
    tol.validate()?;
    let pv = pseudo_values_with(d, opts)?;
    jel_from_pseudo_values(&pv, alpha, tol)
}

/// Runs the EL step on precomputed pseudo-values.
pub fn jel_from_pseudo_values(
    pv: &PseudoValues,
    alpha: f64,
    tol: &Tolerances,
) -> Result<JelResult> {
    check_alpha(alpha)?;
    let critical_value = chi2_1_quantile(alpha)?;
    let base = JelResult {
        delta_hat: pv.delta_hat,
        n: pv.n,
        lambda: None,
        statistic: 0.0,
        p_value: 1.0,
        critical_value,
        reject: false,
        alpha,
        degenerate: false,
        degeneracy: None,
    };

    match solve_lambda(&pv.nu, tol) {
        Ok(lambda) => {
            let statistic = jel_statistic(&pv.nu, lambda)?;
            Ok(JelResult {
                lambda: Some(lambda),
                statistic,
                p_value: chi2_1_sf(statistic)?,
                reject: statistic > critical_value,
                ..base
            })
        }
        Err(Error::AllZero) => Ok(JelResult {
            degenerate: true,
            degeneracy: Some(Degeneracy::AllZero),
            ..base
        }),
        Err(Error::HullViolation) => Ok(JelResult {
            statistic: f64::INFINITY,
            p_value: 0.0,
            reject: true,
            degenerate: true,
            degeneracy: Some(Degeneracy::HullViolation),
            ..base
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::{estimate_delta, EstimatorPath};

    fn ds(x: &[f64], y: &[&str]) -> Dataset {
        Dataset::from_pairs(x.iter().copied().zip(y.iter().copied())).unwrap()
    }

    #[test]
    fn four_point_mean_identity() {
        let d = ds(&[1.0, 2.0, 3.0, 4.0], &["b", "a", "a", "a"]);
        let pv = pseudo_values(&d).unwrap();
        assert!((pv.mean() - 1.0 / 9.0).abs() < 1e-10);
        assert!((pv.delta_hat - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn single_category_pseudo_values_vanish() {
        let d = Dataset::from_pairs((0..12).map(|i| ((i * 5 % 12) as f64 + 0.5, "k"))).unwrap();
        let pv = pseudo_values(&d).unwrap();
        assert!(pv.nu.iter().all(|&v| v == 0.0), "{:?}", pv.nu);
        let r = jel_test(&d, 0.05, &Tolerances::default()).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.degeneracy, Some(Degeneracy::AllZero));
        assert_eq!(r.p_value, 1.0);
        assert!(!r.reject);
    }

    #[test]
    fn downdate_matches_rerun() {
        let d = ds(
            &[0.3, 1.2, 1.2, -0.7, 2.2, 0.3, 0.9, 1.2, -1.5, 2.2, 0.0],
            &["a", "b", "a", "c", "b", "b", "a", "c", "a", "a", "c"],
        );
        for weights in [WeightMode::FullSample, WeightMode::Recomputed] {
            let fast = pseudo_values_with(
                &d,
                JelOptions {
                    weights,
                    leave_one_out: LeaveOneOut::Downdate,
                },
            )
            .unwrap();
            let slow = pseudo_values_with(
                &d,
                JelOptions {
                    weights,
                    leave_one_out: LeaveOneOut::Rerun,
                },
            )
            .unwrap();
            for (a, b) in fast.nu.iter().zip(&slow.nu) {
                assert!((a - b).abs() < 1e-12, "{weights:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn loo_estimate_matches_subsample_estimate() {
        // With recomputed weights the leave-one-out estimate is the plain
        // estimator on the subsample (when no category empties out).
        let x = [0.3, 1.2, 1.7, -0.7, 2.2, 0.4, 0.9, 1.1, -1.5, 2.5];
        let y = ["a", "b", "a", "b", "b", "b", "a", "a", "a", "b"];
        let d = ds(&x, &y);
        let pv = pseudo_values_with(
            &d,
            JelOptions {
                weights: WeightMode::Recomputed,
                ..Default::default()
            },
        )
        .unwrap();
        for i in 0..x.len() {
            let sub = ds(
                &[&x[..i], &x[i + 1..]].concat(),
                &[&y[..i], &y[i + 1..]].concat(),
            );
            let loo = estimate_delta(&sub, EstimatorPath::Brute)
                .unwrap()
                .delta_hat;
            let expected = 10.0 * pv.delta_hat - 9.0 * loo;
            assert!((pv.nu[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_symmetric() {
        let l = solve_lambda(&[-1.0, 1.0], &Tolerances::default()).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(jel_statistic(&[-1.0, 1.0], l).unwrap(), 0.0);
    }

    #[test]
    fn lambda_asymmetric() {
        let nu = [-2.0, 1.0, 1.0];
        let tol = Tolerances::default();
        let l = solve_lambda(&nu, &tol).unwrap();
        // independent bracket from a dense grid over the feasible interval
        let (lo, hi) = (-1.0, 0.5);
        let mut bracket = None;
        let steps = 100_000;
        for s in 1..steps {
            let a = lo + (hi - lo) * (s as f64) / steps as f64;
            let b = lo + (hi - lo) * (s + 1) as f64 / steps as f64;
            if b >= hi {
                break;
            }
            if estimating_equation(&nu, a) > 0.0 && estimating_equation(&nu, b) <= 0.0 {
                bracket = Some((a, b));
                break;
            }
        }
        let (a, b) = bracket.expect("grid scan finds a sign change");
        assert!(l >= a && l <= b, "λ = {l} outside [{a}, {b}]");
        assert!(estimating_equation(&nu, l).abs() <= tol.root_tol);
        // mean zero, so λ = 0 solves too
        assert!(l.abs() < 1e-9);
    }

    #[test]
    fn lambda_nonzero_root() {
        let nu = [-0.5, 0.2, 0.9, 1.4];
        let tol = Tolerances::default();
        let l = solve_lambda(&nu, &tol).unwrap();
        assert!(estimating_equation(&nu, l).abs() <= tol.root_tol);
        assert!(nu.iter().all(|v| 1.0 + l * v > 0.0));
        assert!(l > 0.0 && l < 2.0);
        assert!(jel_statistic(&nu, l).unwrap() > 0.0);
    }

    #[test]
    fn lambda_errors() {
        let tol = Tolerances::default();
        assert_eq!(
            solve_lambda(&[1.0, 2.0, 3.0], &tol),
            Err(Error::HullViolation)
        );
        assert_eq!(solve_lambda(&[0.0, 0.0], &tol), Err(Error::AllZero));
        assert_eq!(solve_lambda(&[0.0, -1.0], &tol), Err(Error::HullViolation));
        let tight = Tolerances {
            max_root_iters: 1,
            ..tol
        };
        assert!(matches!(
            solve_lambda(&[-0.5, 0.2, 0.9, 1.4], &tight),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn statistic_zero_at_zero_lambda() {
        assert_eq!(jel_statistic(&[0.3, -2.0, 5.0], 0.0).unwrap(), 0.0);
        assert!(jel_statistic(&[1.0, -1.0], 2.0).is_err());
    }

    #[test]
    fn hull_violation_rejects() {
        let pv = PseudoValues {
            nu: vec![0.1, 0.2, 0.3, 0.0],
            delta_hat: 0.15,
            n: 4,
        };
        let r = jel_from_pseudo_values(&pv, 0.05, &Tolerances::default()).unwrap();
        assert!(r.degenerate && r.reject);
        assert_eq!(r.statistic, f64::INFINITY);
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn invalid_inputs() {
        let d = ds(&[1.0, 2.0, 3.0], &["a", "b", "a"]);
        assert_eq!(
            pseudo_values(&d),
            Err(Error::SampleTooSmall { needed: 4, got: 3 })
        );
        let d = ds(&[1.0, 2.0, 3.0, 4.0], &["a", "b", "a", "b"]);
        assert_eq!(
            jel_test(&d, 1.5, &Tolerances::default()),
            Err(Error::InvalidAlpha(1.5))
        );
    }
}
