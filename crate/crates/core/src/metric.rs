//! Weighted squared-Hamming distances under diagonal metrics.
//!
//! A diagonal metric assigns one non-negative weight `a_f` to every field
//! position; the squared distance between two messages is the sum of the
//! weights at mismatching positions. The metric's log-determinant is simply
//! `Σ_f ln a_f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::{Corpus, Message};

/// Clamping constants for metric updates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBounds {
    /// Lower weight clamp; the upper clamp is its reciprocal.
    pub weight_floor: f64,
    /// Floor for the per-field dispersion denominator.
    pub denom_floor: f64,
}

impl Default for MetricBounds {
    fn default() -> Self {
        MetricBounds { weight_floor: 1e-6, denom_floor: 1e-9 }
    }
}

impl MetricBounds {
    pub fn weight_ceiling(&self) -> f64 {
        1.0 / self.weight_floor
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMetric {
    weights: Vec<f64>,
}

impl DiagonalMetric {
    pub fn unit(arity: usize) -> Self {
        DiagonalMetric { weights: vec![1.0; arity] }
    }

    /// Rejects non-finite weights and weights below `weight_floor`.
    pub fn new(weights: Vec<f64>, bounds: &MetricBounds) -> Result<Self> {
        if let Some((f, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < bounds.weight_floor) {
            return Err(Error::InvalidInput(format!(
                "metric weight {w} at field {f} is below the floor {}",
                bounds.weight_floor
            )));
        }
        Ok(DiagonalMetric { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    pub fn log_det(&self) -> f64 {
        self.weights.iter().map(|w| w.ln()).sum()
    }
}

/// Σ_f a_f · 1[a_f ≠ b_f] over interned codes.
#[inline]
pub(crate) fn weighted_mismatch(a: &[u32], b: &[u32], weights: &[f64]) -> f64 {
    let mut sum = 0.0;
    for ((x, y), w) in a.iter().zip(b).zip(weights) {
        if x != y {
            sum += w;
        }
    }
    sum
}

/// Weighted squared Hamming distance between two messages.
pub fn distance_sq(a: &Message, b: &Message, m: &DiagonalMetric) -> Result<f64> {
    for arity in [b.arity(), m.arity()] {
        if arity != a.arity() {
            return Err(Error::ArityMismatch { expected: a.arity(), found: arity });
        }
    }
    Ok(a.fields().iter().zip(b.fields()).zip(m.weights()).filter(|((x, y), _)| x != y).map(|(_, w)| w).sum())
}

pub fn log_det(m: &DiagonalMetric) -> f64 {
    m.log_det()
}

/// Per-field constraint-violation tallies feeding [`update_metric`].
///
/// `must[f]` accumulates `(w/2)·1[x_i,f ≠ x_j,f]` over violated must-link pairs
/// touching the cluster; `cannot[f]` accumulates
/// `w̄·(1[x'_f ≠ x''_f] − 1[x_i,f ≠ x_j,f])` over violated cannot-link pairs inside
/// the cluster, where `(x', x'')` is the cluster's max-separated pair.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldViolations {
    pub must: Vec<f64>,
    pub cannot: Vec<f64>,
}

impl FieldViolations {
    pub fn zeros(arity: usize) -> Self {
        FieldViolations { must: vec![0.0; arity], cannot: vec![0.0; arity] }
    }
}

/// Closed-form diagonal metric update for one cluster.
///
/// `a_f = |cluster| / max(ε_d, D_f)` with
/// `D_f = Σ_{x ∈ cluster} 1[x_f ≠ μ_f] + must_f + max(0, cannot_f)`,
/// clamped to `[ε_w, 1/ε_w]`.
pub fn update_metric(
    corpus: &Corpus,
    members: &[usize],
    centroid: &[u32],
    violations: &FieldViolations,
    bounds: &MetricBounds,
) -> Result<DiagonalMetric> {
    let arity = corpus.arity();
    if members.is_empty() {
        return Err(Error::EmptyCluster { cluster: None });
    }
    for len in [centroid.len(), violations.must.len(), violations.cannot.len()] {
        if len != arity {
            return Err(Error::ArityMismatch { expected: arity, found: len });
        }
    }
    let mut dispersion = vec![0.0f64; arity];
    for &i in members {
        for ((d, x), mu) in dispersion.iter_mut().zip(corpus.codes(i)).zip(centroid) {
            if x != mu {
                *d += 1.0;
            }
        }
    }
    let size = members.len() as f64;
    let weights = (0..arity)
        .map(|f| {
            let denom = dispersion[f] + violations.must[f] + violations.cannot[f].max(0.0);
            (size / denom.max(bounds.denom_floor)).clamp(bounds.weight_floor, bounds.weight_ceiling())
        })
        .collect();
    Ok(DiagonalMetric { weights })
}

/// The two maximally separated points of a search domain under one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPair {
    pub first: usize,
    pub second: usize,
    pub sq_distance: f64,
}

/// Exhaustive scan over unordered pairs of `indices`.
///
/// Ties go to the lexicographically smallest `(first, second)`; a singleton
/// domain yields `(i, i, 0.0)`.
pub fn max_separated_pair(indices: &[usize], corpus: &Corpus, m: &DiagonalMetric) -> Result<MaxPair> {
    if m.arity() != corpus.arity() {
        return Err(Error::ArityMismatch { expected: corpus.arity(), found: m.arity() });
    }
    let mut domain = indices.to_vec();
    domain.sort_unstable();
    domain.dedup();
    if let Some(&bad) = domain.iter().find(|&&i| i >= corpus.len()) {
        return Err(Error::InvalidInput(format!("index {bad} outside corpus of {}", corpus.len())));
    }
    max_pair_sorted(&domain, corpus, m.weights()).ok_or(Error::EmptyCluster { cluster: None })
}

/// `domain` must be sorted and deduplicated.
pub(crate) fn max_pair_sorted(domain: &[usize], corpus: &Corpus, weights: &[f64]) -> Option<MaxPair> {
    let (&head, rest) = domain.split_first()?;
    if rest.is_empty() {
        return Some(MaxPair { first: head, second: head, sq_distance: 0.0 });
    }
    let mut best = MaxPair { first: domain[0], second: domain[1], sq_distance: f64::NEG_INFINITY };
    for (a, &i) in domain.iter().enumerate() {
        let xi = corpus.codes(i);
        for &j in &domain[a + 1..] {
            let d = weighted_mismatch(xi, corpus.codes(j), weights);
            if d > best.sq_distance {
                best = MaxPair { first: i, second: j, sq_distance: d };
            }
        }
    }
    Some(best)
}
