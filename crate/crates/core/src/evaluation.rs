//! External clustering quality against the reference abstraction.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::message::LabelVector;

/// Cluster-by-class contingency counts over labeled points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[k][j] = |ω_k ∩ c_j|`.
    pub counts: Vec<Vec<usize>>,
    pub row_ids: Vec<usize>,
    pub col_ids: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn n(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.col_ids.len()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    /// Grid as CSV: header `cluster,<class ids…>`, one row per cluster.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster");
        for j in &self.col_ids {
            let _ = write!(out, ",{j}");
        }
        out.push('\n');
        for (k, row) in self.row_ids.iter().zip(&self.counts) {
            let _ = write!(out, "{k}");
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Rows are clusters `0..=max(assignments)`, columns classes `0..J`.
/// Unlabeled points are skipped.
pub fn confusion(assignments: &[usize], labels: &LabelVector) -> Result<ConfusionMatrix> {
    if assignments.len() != labels.len() {
        return Err(Error::InvalidInput(format!("{} assignments but {} labels", assignments.len(), labels.len())));
    }
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let j = labels.num_classes();
    let mut counts = vec![vec![0usize; j]; k];
    let mut n = 0;
    for (&cluster, label) in assignments.iter().zip(labels.labels()) {
        if let Some(class) = label {
            counts[cluster][*class] += 1;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoLabels);
    }
    Ok(ConfusionMatrix { counts, row_ids: (0..k).collect(), col_ids: (0..j).collect() })
}

/// `(1/N) Σ_k max_j |ω_k ∩ c_j|`.
pub fn purity(cm: &ConfusionMatrix) -> f64 {
    let n = cm.n();
    if n == 0 {
        return 0.0;
    }
    let hits: usize = cm.counts.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    hits as f64 / n as f64
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from a contingency table.
///
/// When the expected index equals its maximum (both partitions are a single
/// block, or both are all singletons) the index is defined as 1.0 if the two
/// partitions coincide and 0.0 otherwise.
pub fn ari_from_confusion(cm: &ConfusionMatrix) -> Result<f64> {
    let n = cm.n();
    if n < 2 {
        return Err(Error::InvalidInput(format!("ARI needs at least 2 labeled points, got {n}")));
    }
    let index: f64 = cm.counts.iter().flatten().map(|&c| comb2(c)).sum();
    let sum_rows: f64 = cm.row_sums().into_iter().map(comb2).sum();
    let sum_cols: f64 = cm.col_sums().into_iter().map(comb2).sum();
    let expected = sum_rows * sum_cols / comb2(n);
    let max_index = 0.5 * (sum_rows + sum_cols);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(if index == max_index { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

pub fn ari(assignments: &[usize], labels: &LabelVector) -> Result<f64> {
    ari_from_confusion(&confusion(assignments, labels)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub purity: f64,
    pub ari: f64,
    pub n: usize,
}

impl EvalReport {
    pub fn new(assignments: &[usize], labels: &LabelVector) -> Result<Self> {
        let confusion = confusion(assignments, labels)?;
        Ok(EvalReport { purity: purity(&confusion), ari: ari_from_confusion(&confusion)?, n: confusion.n(), confusion })
    }
}
