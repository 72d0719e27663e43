//! Monte Carlo size and power studies.
//!
//! Each replication draws from its own stream, `SeededRng::new(seed, 0)
//! .derive(r)`, and the study only counts rejections, so a report is
//! identical whatever the thread count.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::{normal_test, VarianceSource};
use crate::dist::{check_alpha, sample, DistSpec, Draws, SeededRng};
use crate::error::{Error, Result};
use crate::estimator::scale_count;
use crate::estimator::SortedSample;
use crate::jel::{jel_test, Degeneracy};
use crate::types::{category_counts, Dataset, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scenario {
    /// `X ~ Lognormal(mu, sigma)` independent of `Y ~ Uniform{0..k}`.
    Type1Lognormal { mu: f64, sigma: f64, k: usize },
    /// `Y` is the component label of
    /// `p₁ N(0,1) + p₂ Exp(1) + p₃ Lognormal(0,1)` with `p = (1/3, 1/3, 1/3)`.
    MixBalanced,
    /// `p = (5/12, 4/12, 3/12)`.
    MixLight,
    /// `p = (6/10, 3/10, 1/10)`.
    MixHeavy,
}

impl Scenario {
    pub fn weights(&self) -> Vec<f64> {
        match *self {
            Scenario::Type1Lognormal { k, .. } => vec![1.0 / k as f64; k],
            Scenario::MixBalanced => vec![1.0 / 3.0; 3],
            Scenario::MixLight => vec![5.0 / 12.0, 4.0 / 12.0, 3.0 / 12.0],
            Scenario::MixHeavy => vec![6.0 / 10.0, 3.0 / 10.0, 1.0 / 10.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Scenario::Type1Lognormal { mu, sigma, k } = *self {
            if k == 0 {
                return Err(Error::InvalidScenario("need at least one category".into()));
            }
            if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "lognormal parameters ({mu}, {sigma}) are invalid"
                )));
            }
        }
        Ok(())
    }

    fn mixture(&self) -> DistSpec {
        DistSpec::Mixture {
            components: vec![
                DistSpec::Normal {
                    mu: 0.0,
                    sigma: 1.0,
                },
                DistSpec::Exponential { rate: 1.0 },
                DistSpec::Lognormal {
                    mu: 0.0,
                    sigma: 1.0,
                },
            ],
            weights: self.weights(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Type1Lognormal { mu, sigma, k } => {
                write!(f, "type1-lognormal(mu={mu}, sigma={sigma}, K={k})")
            }
            Scenario::MixBalanced => f.write_str("mix-balanced"),
            Scenario::MixLight => f.write_str("mix-light"),
            Scenario::MixHeavy => f.write_str("mix-heavy"),
        }
    }
}

pub fn scenario_sampler(s: &Scenario, n: usize, rng: &mut SeededRng) -> Result<Dataset> {
    s.validate()?;
    if n < 4 {
        return Err(Error::SampleTooSmall { needed: 4, got: n });
    }
    match *s {
        Scenario::Type1Lognormal { mu, sigma, k } => {
            let Draws::Values(x) = sample(&DistSpec::Lognormal { mu, sigma }, n, rng)? else {
                unreachable!()
            };
            let Draws::Codes(y) = sample(
                &DistSpec::Categorical {
                    p: vec![1.0 / k as f64; k],
                },
                n,
                rng,
            )?
            else {
                unreachable!()
            };
            Dataset::from_codes(x, &y)
        }
        _ => {
            let Draws::Labelled { labels, values } = sample(&s.mixture(), n, rng)? else {
                unreachable!()
            };
            Dataset::from_codes(values, &labels)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Jel,
    /// One-sided normal test with jackknife variance.
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: Scenario,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub method: Method,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub mc_stderr: f64,
    /// Replications whose pseudo-values put zero outside their hull
    /// (counted as rejections).
    pub degenerate_hull: usize,
    /// Replications with all pseudo-values zero, or a zero normal-test
    /// variance (counted as non-rejections).
    pub degenerate_zero: usize,
    pub seed: u64,
    pub wall_time_secs: f64,
}

impl SimReport {
    /// `|rate − target| ≤ k · mc_stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.rejection_rate - target).abs() <= k * self.mc_stderr
    }
}

enum Outcome {
    Reject,
    Accept,
    Hull,
    Zero,
}

pub fn run_study(
    s: &Scenario,
    n: usize,
    reps: usize,
    alpha: f64,
    method: Method,
    seed: u64,
) -> Result<SimReport> {
    s.validate()?;
    check_alpha(alpha)?;
    if reps < 100 {
        return Err(Error::InvalidReps {
            needed: 100,
            got: reps,
        });
    }
    let tol = Tolerances::default();
    let base = SeededRng::new(seed, 0);
    let started = Instant::now();

    let outcomes: Vec<Outcome> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<Outcome> {
            let mut rng = base.derive(r);
            let d = scenario_sampler(s, n, &mut rng)?;
            match method {
                Method::Jel => {
                    let res = jel_test(&d, alpha, &tol)?;
                    Ok(match res.degeneracy {
                        Some(Degeneracy::HullViolation) => Outcome::Hull,
                        Some(Degeneracy::AllZero) => Outcome::Zero,
                        None if res.reject => Outcome::Reject,
                        None => Outcome::Accept,
                    })
                }
                Method::Normal => match normal_test(&d, alpha, VarianceSource::Jackknife) {
                    Ok(res) if res.reject => Ok(Outcome::Reject),
                    Ok(_) => Ok(Outcome::Accept),
                    Err(Error::ZeroVariance(_)) => Ok(Outcome::Zero),
                    Err(e) => Err(e),
                },
            }
        })
        .collect::<Result<_>>()?;

    let wall_time_secs = started.elapsed().as_secs_f64();
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let degenerate_hull = count(|o| matches!(o, Outcome::Hull));
    let degenerate_zero = count(|o| matches!(o, Outcome::Zero));
    let rejections = count(|o| matches!(o, Outcome::Reject | Outcome::Hull));
    let rate = rejections as f64 / reps as f64;

    Ok(SimReport {
        scenario: *s,
        n,
        reps,
        alpha,
        method,
        rejections,
        rejection_rate: rate,
        mc_stderr: (rate * (1.0 - rate) / reps as f64).sqrt(),
        degenerate_hull,
        degenerate_zero,
        seed,
        wall_time_secs,
    })
}

/// Sample sizes of the reference size/power grid.
pub const STUDY_SIZES: [usize; 5] = [20, 40, 60, 80, 100];

/// Size study for lognormal `(0, 1)` and `(0, 2)` with `K = 6`, then power
/// for the three mixture scenarios, over [`STUDY_SIZES`].
pub fn reproduce_study_grid(
    type1_reps: usize,
    power_reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<SimReport>> {
    let mut out = Vec::new();
    for sigma in [1.0, 2.0] {
        let s = Scenario::Type1Lognormal {
            mu: 0.0,
            sigma,
            k: 6,
        };
        for n in STUDY_SIZES {
            out.push(run_study(&s, n, type1_reps, alpha, Method::Jel, seed)?);
        }
    }
    for s in [
        Scenario::MixBalanced,
        Scenario::MixLight,
        Scenario::MixHeavy,
    ] {
        for n in STUDY_SIZES {
            out.push(run_study(&s, n, power_reps, alpha, Method::Jel, seed)?);
        }
    }
    Ok(out)
}

/// Permutation p-value `(1 + #{Δ̂_perm ≥ Δ̂_obs}) / (reps + 1)` obtained by
/// shuffling the categories against `x`.
pub fn permutation_baseline(d: &Dataset, reps: usize, rng: &mut SeededRng) -> Result<f64> {
    d.require_n(4)?;
    if reps < 99 {
        return Err(Error::InvalidReps {
            needed: 99,
            got: reps,
        });
    }
    let n = d.n();
    let k_count = d.k_count();
    let weights: Vec<f64> = category_counts(d)
        .counts
        .iter()
        .map(|&m| n as f64 / m as f64)
        .collect();
    let sorted = SortedSample::new(d.x());
    let delta = |y: &[usize]| -> f64 {
        sorted
            .pair_counts(y, k_count)
            .iter()
            .zip(&weights)
            .map(|(&c, &w)| w * scale_count(c, n))
            .sum::<f64>()
            - 1.0 / 3.0
    };

    let observed = delta(d.y());
    let mut y = d.y().to_vec();
    let mut at_least = 0usize;
    for _ in 0..reps {
        rng.shuffle(&mut y);
        if delta(&y) >= observed {
            at_least += 1;
        }
    }
    Ok((1 + at_least) as f64 / (reps + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lognormal_sampler() {
        let s = Scenario::Type1Lognormal {
            mu: 0.0,
            sigma: 1.0,
            k: 6,
        };
        let d = scenario_sampler(&s, 100, &mut SeededRng::new(1, 0)).unwrap();
        assert_eq!(d.n(), 100);
        assert!(d.k_count() <= 6);
        assert!(d.x().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn heavy_mixture_frequencies() {
        let d = scenario_sampler(&Scenario::MixHeavy, 100_000, &mut SeededRng::new(2, 0)).unwrap();
        let counts = category_counts(&d);
        for (code, label) in d.labels().iter().enumerate() {
            let j: usize = label.parse().unwrap();
            let expected = [0.6, 0.3, 0.1][j];
            assert!((counts.p_hat[code] - expected).abs() < 0.01);
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = scenario_sampler(&Scenario::MixLight, 50, &mut SeededRng::new(3, 4)).unwrap();
        let b = scenario_sampler(&Scenario::MixLight, 50, &mut SeededRng::new(3, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_weights() {
        assert_eq!(
            Scenario::MixLight.weights(),
            vec![5.0 / 12.0, 4.0 / 12.0, 3.0 / 12.0]
        );
        assert_eq!(Scenario::MixHeavy.weights(), vec![0.6, 0.3, 0.1]);
        assert!(Scenario::Type1Lognormal {
            mu: 0.0,
            sigma: -1.0,
            k: 6
        }
        .validate()
        .is_err());
        assert!(Scenario::Type1Lognormal {
            mu: 0.0,
            sigma: 1.0,
            k: 0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn study_is_deterministic() {
        let s = Scenario::MixBalanced;
        let a = run_study(&s, 30, 100, 0.05, Method::Jel, 9).unwrap();
        let b = run_study(&s, 30, 100, 0.05, Method::Jel, 9).unwrap();
        assert_eq!(
            (a.rejections, a.degenerate_hull, a.degenerate_zero),
            (b.rejections, b.degenerate_hull, b.degenerate_zero)
        );
        assert!((0.0..=1.0).contains(&a.rejection_rate));
        let r = a.rejection_rate;
        assert_eq!(a.mc_stderr, (r * (1.0 - r) / 100.0).sqrt());
    }

    #[test]
    fn study_preconditions() {
        let s = Scenario::MixBalanced;
        assert!(run_study(&s, 30, 99, 0.05, Method::Jel, 0).is_err());
        assert!(run_study(&s, 3, 100, 0.05, Method::Jel, 0).is_err());
        assert!(run_study(&s, 30, 100, 0.0, Method::Jel, 0).is_err());
    }

    #[test]
    fn permutation_single_category() {
        let d = Dataset::from_pairs((0..10).map(|i| (i as f64, "k"))).unwrap();
        let p = permutation_baseline(&d, 99, &mut SeededRng::new(0, 0)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn permutation_preconditions() {
        let d =
            Dataset::from_pairs((0..10).map(|i| (i as f64, if i % 2 == 0 { "a" } else { "b" })))
                .unwrap();
        assert!(permutation_baseline(&d, 98, &mut SeededRng::new(0, 0)).is_err());
        let p = permutation_baseline(&d, 99, &mut SeededRng::new(0, 0)).unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
}
