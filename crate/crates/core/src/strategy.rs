//! Mixed strategies and solver reports.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Probabilities at or below this are outside the support.
pub const SUPPORT_EPS: f64 = 1e-9;

/// Probability vector; entries are nonnegative and sum to one within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    /// Accepts round-off below 1e-9: tiny negatives are clipped and the
    /// vector is renormalised.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("empty strategy"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -SUPPORT_EPS) {
            return Err(invalid(format!("invalid probabilities {probs:?}")));
        }
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(invalid(format!("probabilities sum to {total}")));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Ok(MixedStrategy(probs))
    }

    /// Normalises an arbitrary nonnegative weight vector, falling back to
    /// uniform when every weight is zero.
    pub fn from_weights(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if total > 0.0 {
            MixedStrategy(weights.iter().map(|w| w.max(0.0) / total).collect())
        } else {
            Self::uniform(weights.len())
        }
    }

    pub fn pure(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        MixedStrategy(v)
    }

    pub fn uniform(n: usize) -> Self {
        MixedStrategy(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.0[..])
    }

    pub fn to_array(&self) -> Array1<f64> {
        Array1::from(self.0.clone())
    }

    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > SUPPORT_EPS)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|p| **p > SUPPORT_EPS).count()
    }

    /// Embeds a strategy over `indices` into a vector of length `n`.
    pub fn lift(&self, indices: &[usize], n: usize) -> Self {
        let mut v = vec![0.0; n];
        for (&i, &p) in indices.iter().zip(&self.0) {
            v[i] += p;
        }
        MixedStrategy(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Optimal,
    Converged,
    IterationCap,
    RuntimeCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub iteration: usize,
    pub time_s: f64,
    pub gap: f64,
}

/// Outcome of a zero-sum solve. `value` is the row player's payoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub value: f64,
    pub row: MixedStrategy,
    pub col: MixedStrategy,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub gap_trace: Vec<GapSample>,
    pub stop: StopReason,
}
