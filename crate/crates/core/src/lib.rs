//! Independence testing between a continuous and a categorical variable.
//!
//! The departure from independence
//!
//! ```text
//! Δ = Σ_k p_k ∫ (F_k(x) − F(x))² dF(x) = Σ_k P(min(X₁,X₂) > X₃, Y₁=Y₂=k) / p_k − 1/3
//! ```
//!
//! is estimated by a sum of degree-3 U-statistics ([`estimator`]) and
//! tested with a jackknife empirical likelihood ratio ([`jel`]) or a
//! one-sided normal approximation ([`asymptotic`]). [`sim`] runs size and
//! power studies on seeded streams from [`dist`].
//!
//! ```
//! use catgini::{jel_test, Dataset, Tolerances};
//!
//! let d = Dataset::from_pairs([
//!     (1.2, "a"), (0.4, "a"), (2.2, "b"), (3.1, "b"), (0.9, "a"), (2.8, "b"),
//! ])
//! .unwrap();
//! let r = jel_test(&d, 0.05, &Tolerances::default()).unwrap();
//! assert!(r.statistic >= 0.0);
//! ```

pub mod asymptotic;
pub mod dist;
pub mod error;
pub mod estimator;
pub mod jel;
pub mod sim;
pub mod types;

pub use asymptotic::{
    adjudicate, empirical_null_variance, normal_test, null_variance, ClosedForm, NormalTestResult,
    NullVariance, VarianceSource,
};
pub use error::{Error, Result};
pub use estimator::{
    delta_k_bruteforce, delta_k_fast, estimate_delta, kernel_sym, EstimatorPath, GiniEstimate,
};
pub use jel::{jel_statistic, jel_test, pseudo_values, solve_lambda, JelResult, PseudoValues};
pub use sim::{permutation_baseline, run_study, scenario_sampler, Method, Scenario, SimReport};
pub use types::{category_counts, CategoryCounts, Dataset, Tolerances};
