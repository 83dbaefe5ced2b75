//! Clustering-based evaluation of a feature subset.
//!
//! A selection is scored by clustering the samples on the selected columns with
//! seeded k-means and comparing the result against ground-truth classes using
//! clustering accuracy (ACC) and normalized mutual information (NMI).

mod hungarian;
mod kmeans;

use std::collections::HashMap;
use std::hash::Hash;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hungarian::{hungarian_max_match, matching_weight};
pub use kmeans::{kmeans, KMeansResult, DEFAULT_MAX_ITERS as KMEANS_MAX_ITERS};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Number of k-means restarts averaged per evaluation.
pub const DEFAULT_REPEATS: usize = 20;

/// Cluster or class labels drawn from `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    pub labels: Vec<usize>,
    /// Size of the label space; every label is below `k`.
    pub k: usize,
}

impl LabelVector {
    /// Takes `k` as one past the largest label.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels
            .iter()
            .max()
            .map(|&m| m + 1)
            .ok_or_else(|| Error::InvalidDimension("label vector is empty".into()))?;
        Ok(Self { labels, k })
    }

    pub fn with_k(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidData(format!(
                "label {bad} outside label space 0..{k}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidDimension(
                "label space must be non-empty".into(),
            ));
        }
        Ok(Self { labels, k })
    }

    /// Maps arbitrary values to `0..k` in order of first appearance.
    pub fn from_values<T: Eq + Hash + Clone>(values: &[T]) -> Result<Self> {
        let mut ids: HashMap<T, usize> = HashMap::new();
        let labels = values
            .iter()
            .map(|v| {
                let next = ids.len();
                *ids.entry(v.clone()).or_insert(next)
            })
            .collect();
        Self::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of labels that actually occur.
    pub fn n_distinct(&self) -> usize {
        let mut seen = vec![false; self.k];
        self.labels.iter().for_each(|&l| seen[l] = true);
        seen.into_iter().filter(|&s| s).count()
    }
}

fn check_lengths(truth: &LabelVector, pred: &LabelVector) -> Result<()> {
    if truth.len() != pred.len() {
        return Err(Error::InvalidDimension(format!(
            "label vectors differ in length: {} vs {}",
            truth.len(),
            pred.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidDimension("label vectors are empty".into()));
    }
    Ok(())
}

/// Clustering accuracy: the fraction of samples whose predicted label, after the
/// best one-to-one relabeling, equals the true label.
pub fn accuracy(truth: &LabelVector, pred: &LabelVector) -> Result<f64> {
    check_lengths(truth, pred)?;
    // rows: predicted labels, columns: true labels; zero-padded to square
    let size = truth.k.max(pred.k);
    let mut confusion = DMatrix::zeros(size, size);
    for (&t, &p) in truth.labels.iter().zip(&pred.labels) {
        confusion[(p, t)] += 1.0;
    }
    let mapping = hungarian_max_match(&confusion)?;
    Ok(matching_weight(&confusion, &mapping) / truth.len() as f64)
}

/// `MI(C, C') / max(H(C), H(C'))` with natural logarithms; 0 when both entropies vanish.
pub fn nmi(truth: &LabelVector, pred: &LabelVector) -> Result<f64> {
    check_lengths(truth, pred)?;
    let n = truth.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut row = vec![0usize; truth.k];
    let mut col = vec![0usize; pred.k];
    for (&t, &p) in truth.labels.iter().zip(&pred.labels) {
        *joint.entry((t, p)).or_insert(0) += 1;
        row[t] += 1;
        col[p] += 1;
    }
    let entropy = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let q = c as f64 / n;
                -q * q.ln()
            })
            .sum()
    };
    let h_truth = entropy(&row);
    let h_pred = entropy(&col);
    let denom = h_truth.max(h_pred);
    if denom <= 0.0 {
        return Ok(0.0);
    }
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .into_iter()
        .map(|((t, p), c)| {
            let c = c as f64;
            (c / n) * (c * n / (row[t] as f64 * col[p] as f64)).ln()
        })
        .sum();
    Ok((mi / denom).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub std: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionScores {
    pub acc: Summary,
    pub nmi: Summary,
    pub acc_per_repeat: Vec<f64>,
    pub nmi_per_repeat: Vec<f64>,
}

/// Clusters `x` restricted to `features` with `repeats` k-means runs seeded
/// `base_seed, base_seed + 1, ...` and summarizes ACC and NMI against `truth`.
pub fn evaluate_selection(
    x: &DataMatrix,
    truth: &LabelVector,
    features: &[usize],
    repeats: usize,
    base_seed: u64,
) -> Result<SelectionScores> {
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    if truth.len() != x.n_samples() {
        return Err(Error::InvalidDimension(format!(
            "{} labels for {} samples",
            truth.len(),
            x.n_samples()
        )));
    }
    let sub = x.select_columns(features)?;
    let k = truth.n_distinct();
    let runs: Vec<(f64, f64)> = (0..repeats as u64)
        .into_par_iter()
        .map(|r| {
            let res = kmeans(&sub, k, base_seed.wrapping_add(r), KMEANS_MAX_ITERS)?;
            Ok((
                accuracy(truth, &res.assignments)?,
                nmi(truth, &res.assignments)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (acc, nmi): (Vec<f64>, Vec<f64>) = runs.into_iter().unzip();
    Ok(SelectionScores {
        acc: Summary::of(&acc),
        nmi: Summary::of(&nmi),
        acc_per_repeat: acc,
        nmi_per_repeat: nmi,
    })
}
