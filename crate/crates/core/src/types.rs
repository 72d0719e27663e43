//! Validated sample model shared by the estimator, the tests and the
//! simulation harness.
//!
//! A [`Dataset`] pairs a finite real `x_i` with a category code `y_i` in
//! `0..K`. Codes are handed out in order of first appearance and only to
//! labels that actually occur, so every category has at least one member
//! and every estimated proportion is strictly positive.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Immutable paired sample `(x_i, y_i)`, `i = 0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<usize>,
    labels: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from `(x, label)` records.
    ///
    /// Categories are coded by first appearance. Fails with
    /// [`Error::Empty`] on no input and [`Error::NonFiniteValue`] on the
    /// first NaN or infinite `x`.
    pub fn from_pairs<I, S>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, S)>,
        S: AsRef<str>,
    {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();

        for (i, (value, label)) in records.into_iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue(i));
            }
            let label = label.as_ref();
            let code = match index.get(label) {
                Some(&c) => c,
                None => {
                    let c = labels.len();
                    labels.push(label.to_owned());
                    index.insert(label.to_owned(), c);
                    c
                }
            };
            x.push(value);
            y.push(code);
        }

        if x.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { x, y, labels })
    }

    /// Builds a dataset from raw integer category codes (e.g. draws from a
    /// categorical distribution). Codes are re-assigned by first
    /// appearance; the label of each category is its original code.
    pub fn from_codes(x: Vec<f64>, codes: &[usize]) -> Result<Self> {
        if x.len() != codes.len() {
            return Err(Error::LengthMismatch {
                x: x.len(),
                y: codes.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }

        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut labels = Vec::new();
        let y = codes
            .iter()
            .map(|&c| {
                *remap.entry(c).or_insert_with(|| {
                    labels.push(c.to_string());
                    labels.len() - 1
                })
            })
            .collect();
        Ok(Self { x, y, labels })
    }

    /// Same observations with the category codes replaced. `codes` must
    /// use the existing `0..K` coding and keep every category occupied.
    pub fn with_codes(&self, codes: Vec<usize>) -> Result<Self> {
        if codes.len() != self.x.len() {
            return Err(Error::LengthMismatch {
                x: self.x.len(),
                y: codes.len(),
            });
        }
        let k_count = self.k_count();
        let mut seen = vec![false; k_count];
        for &c in &codes {
            if c >= k_count {
                return Err(Error::UnknownCategory { code: c, k_count });
            }
            seen[c] = true;
        }
        if let Some(code) = seen.iter().position(|s| !s) {
            return Err(Error::UnknownCategory { code, k_count });
        }
        Ok(Self {
            x: self.x.clone(),
            y: codes,
            labels: self.labels.clone(),
        })
    }

    /// Applies `f` to every `x`, keeping the categories.
    pub fn map_x(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let x: Vec<f64> = self.x.iter().map(|&v| f(v)).collect();
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self {
            x,
            y: self.y.clone(),
            labels: self.labels.clone(),
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    /// Original label of each category code.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, code: usize) -> Option<&str> {
        self.labels.get(code).map(String::as_str)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Number of distinct observed categories.
    pub fn k_count(&self) -> usize {
        self.labels.len()
    }

    /// Records in input order as `(x, label)`.
    pub fn records(&self) -> impl Iterator<Item = (f64, &str)> + '_ {
        self.x
            .iter()
            .zip(&self.y)
            .map(move |(&v, &c)| (v, self.labels[c].as_str()))
    }

    pub(crate) fn require_n(&self, needed: usize) -> Result<()> {
        if self.n() < needed {
            Err(Error::SampleTooSmall {
                needed,
                got: self.n(),
            })
        } else {
            Ok(())
        }
    }
}

/// Per-category counts and plug-in proportions `p̂_k = count_k / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub counts: Vec<usize>,
    pub p_hat: Vec<f64>,
}

pub fn category_counts(d: &Dataset) -> CategoryCounts {
    let mut counts = vec![0usize; d.k_count()];
    for &c in d.y() {
        counts[c] += 1;
    }
    let n = d.n() as f64;
    let p_hat = counts.iter().map(|&c| c as f64 / n).collect();
    CategoryCounts { counts, p_hat }
}

/// Numeric tolerances for the root solver and oracle comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance on the estimating equation `|g(λ)|`.
    pub root_tol: f64,
    pub float_eq_tol: f64,
    pub max_root_iters: usize,
}

impl Tolerances {
    pub fn new(root_tol: f64, float_eq_tol: f64, max_root_iters: usize) -> Result<Self> {
        let t = Self {
            root_tol,
            float_eq_tol,
            max_root_iters,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.root_tol > 0.0 && self.root_tol.is_finite()) {
            return Err(Error::InvalidTolerances(format!(
                "root_tol must be positive, got {}",
                self.root_tol
            )));
        }
        if !(self.float_eq_tol > 0.0 && self.float_eq_tol.is_finite()) {
            return Err(Error::InvalidTolerances(format!(
                "float_eq_tol must be positive, got {}",
                self.float_eq_tol
            )));
        }
        if self.max_root_iters == 0 {
            return Err(Error::InvalidTolerances(
                "max_root_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            root_tol: 1e-10,
            float_eq_tol: 1e-12,
            max_root_iters: 200,
        }
    }
}
