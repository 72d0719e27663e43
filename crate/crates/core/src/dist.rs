//! Special functions and seeded variate generation.
//!
//! The generator is ChaCha8 keyed by a 64-bit seed (expanded with
//! SplitMix64) and addressed by a 64-bit stream id, so every replication of
//! a study owns an independent, platform-stable stream. Continuous variates
//! are produced by inverse-CDF transforms of one uniform per draw.

use libm::erfc;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// `Φ(x)` for the standard normal.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `Φ⁻¹(u)` for `u ∈ (0, 1)`: `erfc⁻¹` start, then one Halley step
/// against [`std_normal_cdf`].
pub fn std_normal_quantile(u: f64) -> f64 {
    let x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
    if !x.is_finite() {
        return x;
    }
    let e = std_normal_cdf(x) - u;
    let t = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - t / (1.0 + 0.5 * x * t)
}

/// Upper tail `P(χ²₁ > x) = erfc(√(x/2))`.
pub fn chi2_1_sf(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::DomainError(format!(
            "chi-square statistic must be non-negative, got {x}"
        )));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(erfc((x / 2.0).sqrt()))
}

/// Upper-`alpha` critical value of χ²₁, i.e. `Φ⁻¹(1 − α/2)²`.
pub fn chi2_1_quantile(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let z = std_normal_quantile(1.0 - alpha / 2.0);
    Ok(z * z)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// Reproducible random stream identified by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Stream for replication `index` of a study seeded with `self.seed()`.
    pub fn derive(&self, index: u64) -> Self {
        let mut state = self.stream_id ^ index.rotate_left(32);
        Self::new(self.seed, splitmix64(&mut state) ^ index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`, 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` by rejection on the top bits.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "empty range");
        let bound = bound as u64;
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % bound) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Distribution families used by the simulation scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Normal {
        mu: f64,
        sigma: f64,
    },
    Exponential {
        rate: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Categorical {
        p: Vec<f64>,
    },
    /// Draws a component label with probability `weights[j]`, then a value
    /// from `components[j]`.
    Mixture {
        components: Vec<DistSpec>,
        weights: Vec<f64>,
    },
}

/// Output of [`sample`]; mixtures keep the component label of every draw.
#[derive(Debug, Clone, PartialEq)]
pub enum Draws {
    Values(Vec<f64>),
    Codes(Vec<usize>),
    Labelled {
        labels: Vec<usize>,
        values: Vec<f64>,
    },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::Normal { mu, sigma } | DistSpec::Lognormal { mu, sigma } => {
                if !mu.is_finite() || !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "need finite mu and sigma > 0, got ({mu}, {sigma})"
                    )));
                }
            }
            DistSpec::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidSpec(format!("rate must be > 0, got {rate}")));
                }
            }
            DistSpec::Categorical { p } => check_weights(p)?,
            DistSpec::Mixture {
                components,
                weights,
            } => {
                check_weights(weights)?;
                if components.len() != weights.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} components but {} weights",
                        components.len(),
                        weights.len()
                    )));
                }
                for c in components {
                    if !c.is_continuous() {
                        return Err(Error::InvalidSpec(
                            "mixture components must be continuous".into(),
                        ));
                    }
                    c.validate()?;
                }
            }
        }
        Ok(())
    }

    fn is_continuous(&self) -> bool {
        matches!(
            self,
            DistSpec::Normal { .. } | DistSpec::Exponential { .. } | DistSpec::Lognormal { .. }
        )
    }

    /// One draw from a continuous family.
    fn draw_value(&self, rng: &mut SeededRng) -> f64 {
        match *self {
            DistSpec::Normal { mu, sigma } => mu + sigma * std_normal_quantile(rng.uniform()),
            DistSpec::Lognormal { mu, sigma } => {
                (mu + sigma * std_normal_quantile(rng.uniform())).exp()
            }
            DistSpec::Exponential { rate } => -(1.0 - rng.uniform()).ln() / rate,
            _ => unreachable!("validated as continuous"),
        }
    }
}

fn check_weights(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidSpec("empty weight vector".into()));
    }
    if p.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidSpec(format!(
            "weights must be strictly positive: {p:?}"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Index of the first cumulative weight exceeding `u`.
fn invert_categorical(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return j;
        }
    }
    p.len() - 1
}

pub fn sample(spec: &DistSpec, n: usize, rng: &mut SeededRng) -> Result<Draws> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidSpec("sample size must be at least 1".into()));
    }
    Ok(match spec {
        DistSpec::Categorical { p } => Draws::Codes(
            (0..n)
                .map(|_| invert_categorical(p, rng.uniform()))
                .collect(),
        ),
        DistSpec::Mixture {
            components,
            weights,
        } => {
            let mut labels = Vec::with_capacity(n);
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let j = invert_categorical(weights, rng.uniform());
                labels.push(j);
                values.push(components[j].draw_value(rng));
            }
            Draws::Labelled { labels, values }
        }
        continuous => Draws::Values((0..n).map(|_| continuous.draw_value(rng)).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_symmetry() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        for &x in &[0.1, 0.7, 1.3, 2.9, 5.0] {
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
        assert!((std_normal_cdf(1.959963985) - 0.975).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &u in &[1e-10, 0.01, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-9] {
            let x = std_normal_quantile(u);
            assert!(
                (std_normal_cdf(x) - u).abs() < 1e-13 * u.max(1e-3),
                "u={u} err={}",
                std_normal_cdf(x) - u
            );
        }
    }

    #[test]
    fn chi2_values() {
        assert_eq!(chi2_1_sf(0.0).unwrap(), 1.0);
        assert!((chi2_1_sf(3.841458821).unwrap() - 0.05).abs() < 1e-8);
        assert!((chi2_1_sf(6.70).unwrap() - 0.00964).abs() < 1e-5);
        assert_eq!(chi2_1_sf(f64::INFINITY).unwrap(), 0.0);
        assert!(chi2_1_sf(-1.0).is_err());
        assert!((chi2_1_quantile(0.05).unwrap() - 3.841458820694124).abs() < 1e-10);
        assert!(chi2_1_quantile(1.0).is_err());
    }

    #[test]
    fn chi2_matches_squared_normal() {
        // P(χ²₁ > z²) = 2(1 − Φ(z))
        for &z in &[0.3, 1.0, 1.959963984540054, 2.5758293035489, 4.0] {
            let lhs = chi2_1_sf(z * z).unwrap();
            let rhs = 2.0 * std_normal_cdf(-z);
            assert!((lhs - rhs).abs() < 1e-14, "z={z}");
        }
    }

    #[test]
    fn rng_is_reproducible() {
        let mut a = SeededRng::new(42, 7);
        let mut b = SeededRng::new(42, 7);
        let va: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let vb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        assert_eq!(va, vb);

        let mut c = SeededRng::new(42, 8);
        assert_ne!(va[0], c.next_u64());
        let mut d = SeededRng::new(43, 7);
        assert_ne!(va[0], d.next_u64());
    }

    #[test]
    fn derived_streams_differ() {
        let base = SeededRng::new(1, 0);
        let firsts: Vec<u64> = (0..64).map(|i| base.derive(i).next_u64()).collect();
        let mut dedup = firsts.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), firsts.len());
        assert_eq!(base.derive(5).next_u64(), base.derive(5).next_u64());
    }

    #[test]
    fn uniform_in_open_interval() {
        let mut r = SeededRng::new(3, 0);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn exponential_mean() {
        let n = 100_000;
        let mut r = SeededRng::new(11, 0);
        let Draws::Values(v) = sample(&DistSpec::Exponential { rate: 1.0 }, n, &mut r).unwrap()
        else {
            panic!("expected values")
        };
        let mean = v.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt(), "mean={mean}");
    }

    #[test]
    fn categorical_frequencies() {
        let n = 100_000;
        let mut r = SeededRng::new(12, 0);
        let spec = DistSpec::Categorical {
            p: vec![1.0 / 3.0; 3],
        };
        let Draws::Codes(c) = sample(&spec, n, &mut r).unwrap() else {
            panic!("expected codes")
        };
        for k in 0..3 {
            let f = c.iter().filter(|&&v| v == k).count() as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.01, "k={k} f={f}");
        }
    }

    #[test]
    fn mixture_returns_labels() {
        let spec = DistSpec::Mixture {
            components: vec![
                DistSpec::Normal {
                    mu: 0.0,
                    sigma: 1.0,
                },
                DistSpec::Lognormal {
                    mu: 0.0,
                    sigma: 1.0,
                },
            ],
            weights: vec![0.5, 0.5],
        };
        let mut r = SeededRng::new(5, 0);
        let Draws::Labelled { labels, values } = sample(&spec, 1000, &mut r).unwrap() else {
            panic!("expected labelled draws")
        };
        assert_eq!(labels.len(), 1000);
        // lognormal draws are positive
        assert!(labels
            .iter()
            .zip(&values)
            .filter(|(&l, _)| l == 1)
            .all(|(_, &v)| v > 0.0));
    }

    #[test]
    fn same_seed_same_sample() {
        let spec = DistSpec::Lognormal {
            mu: 0.0,
            sigma: 2.0,
        };
        let a = sample(&spec, 50, &mut SeededRng::new(9, 1)).unwrap();
        let b = sample(&spec, 50, &mut SeededRng::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs() {
        let mut r = SeededRng::new(0, 0);
        assert!(sample(
            &DistSpec::Normal {
                mu: 0.0,
                sigma: 0.0
            },
            3,
            &mut r
        )
        .is_err());
        assert!(sample(&DistSpec::Exponential { rate: -1.0 }, 3, &mut r).is_err());
        assert!(sample(&DistSpec::Categorical { p: vec![0.5, 0.6] }, 3, &mut r).is_err());
        assert!(sample(&DistSpec::Categorical { p: vec![1.0, 0.0] }, 3, &mut r).is_err());
        assert!(sample(&DistSpec::Exponential { rate: 1.0 }, 0, &mut r).is_err());
    }

    #[test]
    fn monotone_on_grid() {
        let mut prev_cdf = 0.0;
        let mut prev_chi = 0.0;
        for i in 0..2000 {
            let x = -10.0 + i as f64 * 0.01;
            let c = std_normal_cdf(x);
            assert!(c >= prev_cdf);
            prev_cdf = c;
            let q = 1.0 - chi2_1_sf(i as f64 * 0.02).unwrap();
            assert!(q >= prev_chi);
            prev_chi = q;
        }
    }
}
