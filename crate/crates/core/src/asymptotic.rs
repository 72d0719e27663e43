//! Null variance of `√n Δ̂` and the one-sided normal test.
//!
//! Two closed forms for `σ₀² = aᵀΣa`, `a_k = 1/p_k`, are in circulation:
//!
//! | variant     | `σ_kk`                  | `σ_kl`               |
//! |-------------|-------------------------|----------------------|
//! | main text   | `p_k³/2 − (31/45) p_k⁴` | `−(31/45) p_k² p_l²` |
//! | appendix    | `p_k³/2 − (7/15) p_k⁴`  | `−(7/15) p_k² p_l²`  |
//!
//! Both are exposed unchanged. [`empirical_null_variance`] simulates
//! `n·Var(Δ̂)` under independence so the two can be checked against the
//! estimator actually computed, and [`adjudicate`] writes that comparison
//! up.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{
    check_alpha, sample, std_normal_cdf, std_normal_quantile, DistSpec, Draws, SeededRng,
};
use crate::error::{Error, Result};
use crate::estimator::{estimate_delta, scale_count, EstimatorPath, SortedSample};
use crate::jel::pseudo_values;
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    MainText,
    Appendix,
}

impl ClosedForm {
    fn coefficient(self) -> f64 {
        match self {
            ClosedForm::MainText => 31.0 / 45.0,
            ClosedForm::Appendix => 7.0 / 15.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceVariant {
    MainText,
    Appendix,
    Empirical,
}

impl From<ClosedForm> for VarianceVariant {
    fn from(c: ClosedForm) -> Self {
        match c {
            ClosedForm::MainText => VarianceVariant::MainText,
            ClosedForm::Appendix => VarianceVariant::Appendix,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullVariance {
    /// May be negative for the main-text coefficients; see module docs.
    pub value: f64,
    pub variant: VarianceVariant,
    pub p: Vec<f64>,
}

pub(crate) fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidProbabilityVector("empty".into()));
    }
    if let Some(v) = p.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidProbabilityVector(format!(
            "entry {v} is not strictly positive"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilityVector(format!(
            "entries sum to {total}"
        )));
    }
    Ok(())
}

/// Closed-form `σ₀² = aᵀΣa`.
pub fn null_variance(p: &[f64], variant: ClosedForm) -> Result<NullVariance> {
    check_probabilities(p)?;
    let c = variant.coefficient();
    let mut value = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        for (l, &pl) in p.iter().enumerate() {
            let sigma = if k == l {
                pk.powi(3) / 2.0 - c * pk.powi(4)
            } else {
                -c * pk * pk * pl * pl
            };
            value += sigma / (pk * pl);
        }
    }
    Ok(NullVariance {
        value,
        variant: variant.into(),
        p: p.to_vec(),
    })
}

/// Monte Carlo `n·Var(Δ̂)` under independence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariance {
    /// `n·Var(Δ̂)` with plug-in weights `1/p̂_k`.
    pub value: f64,
    pub std_error: f64,
    /// `n·Var` of the same statistic weighted by the true `1/p_k`.
    pub value_known_p: f64,
    pub std_error_known_p: f64,
    /// Mean of `Δ̂` across replications.
    pub mean_delta: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

/// Simulates `X ~ N(0,1)` independent of `Y ~ Categorical(p)` and
/// returns `n·Var(Δ̂)` across `reps` replications. Replication `r` uses
/// stream `r` derived from `seed`, so the result does not depend on
/// thread scheduling.
pub fn empirical_null_variance(
    p: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<EmpiricalVariance> {
    check_probabilities(p)?;
    if n < 50 {
        return Err(Error::SampleTooSmall { needed: 50, got: n });
    }
    if reps < 1000 {
        return Err(Error::InvalidReps {
            needed: 1000,
            got: reps,
        });
    }
    let base = SeededRng::new(seed, 0);
    let x_spec = DistSpec::Normal {
        mu: 0.0,
        sigma: 1.0,
    };
    let y_spec = DistSpec::Categorical { p: p.to_vec() };
    let k_count = p.len();

    let draws: Vec<(f64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let mut rng = base.derive(r);
            let Draws::Values(x) = sample(&x_spec, n, &mut rng)? else {
                unreachable!()
            };
            let Draws::Codes(y) = sample(&y_spec, n, &mut rng)? else {
                unreachable!()
            };
            let counts = SortedSample::new(&x).pair_counts(&y, k_count);
            let mut sizes = vec![0usize; k_count];
            for &c in &y {
                sizes[c] += 1;
            }
            let (mut plug_in, mut known) = (-1.0 / 3.0, -1.0 / 3.0);
            for k in 0..k_count {
                let dk = scale_count(counts[k], n);
                if sizes[k] > 0 {
                    plug_in += dk * n as f64 / sizes[k] as f64;
                }
                known += dk / p[k];
            }
            Ok((plug_in, known))
        })
        .collect::<Result<_>>()?;

    let plug_in: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let known: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let (var, se) = variance_with_se(&plug_in);
    let (var_k, se_k) = variance_with_se(&known);
    let scale = n as f64;
    Ok(EmpiricalVariance {
        value: scale * var,
        std_error: scale * se,
        value_known_p: scale * var_k,
        std_error_known_p: scale * se_k,
        mean_delta: plug_in.iter().sum::<f64>() / reps as f64,
        n,
        reps,
        seed,
    })
}

/// Sample variance and its large-sample standard error
/// `√((m₄ − s⁴)/R)`.
fn variance_with_se(v: &[f64]) -> (f64, f64) {
    let r = v.len() as f64;
    let mean = v.iter().sum::<f64>() / r;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / r;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    let var = m2 * r / (r - 1.0);
    let se = ((m4 - m2 * m2).max(0.0) / r).sqrt();
    (var, se)
}

/// Comparison of both closed forms with the simulated variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceAdjudication {
    pub p: Vec<f64>,
    pub empirical: EmpiricalVariance,
    pub main_text: f64,
    pub appendix: f64,
    pub main_text_matches: bool,
    pub appendix_matches: bool,
    pub main_text_matches_known_p: bool,
    pub appendix_matches_known_p: bool,
}

/// Number of Monte Carlo standard errors within which a closed form is
/// said to match.
pub const MATCH_SE: f64 = 3.0;

pub fn adjudicate(p: &[f64], n: usize, reps: usize, seed: u64) -> Result<VarianceAdjudication> {
    let empirical = empirical_null_variance(p, n, reps, seed)?;
    let main_text = null_variance(p, ClosedForm::MainText)?.value;
    let appendix = null_variance(p, ClosedForm::Appendix)?.value;
    let within = |v: f64, target: f64, se: f64| (v - target).abs() <= MATCH_SE * se;
    Ok(VarianceAdjudication {
        p: p.to_vec(),
        main_text_matches: within(main_text, empirical.value, empirical.std_error),
        appendix_matches: within(appendix, empirical.value, empirical.std_error),
        main_text_matches_known_p: within(
            main_text,
            empirical.value_known_p,
            empirical.std_error_known_p,
        ),
        appendix_matches_known_p: within(
            appendix,
            empirical.value_known_p,
            empirical.std_error_known_p,
        ),
        main_text,
        appendix,
        empirical,
    })
}

impl VarianceAdjudication {
    pub fn verdict(&self) -> &'static str {
        match (self.main_text_matches, self.appendix_matches) {
            (true, true) => "both closed forms match (overlapping)",
            (true, false) => "main-text form (31/45) matches; appendix form (7/15) does not",
            (false, true) => "appendix form (7/15) matches; main-text form (31/45) does not",
            (false, false) => "neither closed form matches",
        }
    }
}

impl fmt::Display for VarianceAdjudication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.empirical;
        let yn = |b: bool| if b { "yes" } else { "no" };
        writeln!(f, "# Null variance adjudication")?;
        writeln!(f)?;
        writeln!(
            f,
            "p = {:?}, n = {}, reps = {}, seed = {}",
            self.p, e.n, e.reps, e.seed
        )?;
        writeln!(f, "mean of Δ̂ under H0: {:.6e}", e.mean_delta)?;
        writeln!(f)?;
        writeln!(f, "| quantity | value | MC s.e. |")?;
        writeln!(f, "|---|---|---|")?;
        writeln!(
            f,
            "| n·Var(Δ̂), plug-in p̂ | {:.6e} | {:.2e} |",
            e.value, e.std_error
        )?;
        writeln!(
            f,
            "| n·Var(Δ̂), true p | {:.6e} | {:.2e} |",
            e.value_known_p, e.std_error_known_p
        )?;
        writeln!(f, "| σ₀² main text (31/45) | {:.6e} | |", self.main_text)?;
        writeln!(f, "| σ₀² appendix (7/15) | {:.6e} | |", self.appendix)?;
        writeln!(f)?;
        writeln!(
            f,
            "within {MATCH_SE} s.e. of plug-in variance: main text {}, appendix {}",
            yn(self.main_text_matches),
            yn(self.appendix_matches)
        )?;
        writeln!(
            f,
            "within {MATCH_SE} s.e. of true-p variance:  main text {}, appendix {}",
            yn(self.main_text_matches_known_p),
            yn(self.appendix_matches_known_p)
        )?;
        write!(f, "verdict: {}", self.verdict())
    }
}

/// Source of `σ̂₀²` for [`normal_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceSource {
    MainText,
    Appendix,
    /// `S/4` with `S` the mean squared pseudo-value.
    #[default]
    Jackknife,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalTestResult {
    pub delta_hat: f64,
    pub n: usize,
    pub sigma0_sq: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub critical_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub variance_source: VarianceSource,
}

/// One-sided test rejecting for `√n Δ̂ / σ̂₀ > z_α`.
pub fn normal_test(d: &Dataset, alpha: f64, source: VarianceSource) -> Result<NormalTestResult> {
    check_alpha(alpha)?;
    d.require_n(4)?;
    let est = estimate_delta(d, EstimatorPath::Fast)?;
    let sigma0_sq = match source {
        VarianceSource::MainText => null_variance(&est.p_hat, ClosedForm::MainText)?.value,
        VarianceSource::Appendix => null_variance(&est.p_hat, ClosedForm::Appendix)?.value,
        VarianceSource::Jackknife => pseudo_values(d)?.mean_square() / 4.0,
    };
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::ZeroVariance(sigma0_sq));
    }
    let statistic = (d.n() as f64).sqrt() * est.delta_hat / sigma0_sq.sqrt();
    let critical_value = std_normal_quantile(1.0 - alpha);
    Ok(NormalTestResult {
        delta_hat: est.delta_hat,
        n: d.n(),
        sigma0_sq,
        statistic,
        p_value: std_normal_cdf(-statistic),
        critical_value,
        reject: statistic > critical_value,
        alpha,
        variance_source: source,
    })
}
