//! SVM datasets, estimators, metrics, and the relaxation builders.

mod builders;

pub use builders::{
    build_conic_relaxation, build_decomposition_relaxation, build_hinge, build_robust_l1,
    default_decomposition_d, ConicLayout,
};

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{ConicProgram, Solution, SolveStatus};
use crate::hull::{phi_loss, LossParams};

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("dataset is empty")]
    Empty,
    #[error("label {0} is not in {{-1, +1}}")]
    BadLabel(f64),
    #[error("ragged features: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("invalid subset collection: {0}")]
    BadSubsets(String),
    #[error("subset collection would have {count} members, cap is {cap}")]
    TooLarge { count: usize, cap: usize },
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error("decomposition is invalid: I − AᵀDA has eigenvalue {0}")]
    InvalidDecomposition(f64),
    #[error("solution status is {0:?}, expected Optimal")]
    StatusNotOptimal(SolveStatus),
    #[error("program has no weight variables")]
    NoWeights,
    #[error("{0}")]
    Conic(String),
}

impl From<crate::conic::ConicError> for SvmError {
    fn from(e: crate::conic::ConicError) -> Self {
        SvmError::Conic(e.to_string())
    }
}

/// Misclassification budget or penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SvmMode {
    /// `Σ z ≤ k`; `k` may be fractional on relaxation grids.
    Cardinality(f64),
    /// `λ Σ z` added to the objective.
    Penalty(f64),
}

/// Labelled data with raw features; the intercept column is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub intercept: bool,
}

impl SvmDataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>, intercept: bool) -> Result<Self, SvmError> {
        if features.len() != labels.len() {
            return Err(SvmError::Ragged { row: features.len().min(labels.len()), expected: labels.len(), found: features.len() });
        }
        if let Some(&y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(SvmError::BadLabel(y));
        }
        let p = features.first().map_or(0, Vec::len);
        for (row, f) in features.iter().enumerate() {
            if f.len() != p {
                return Err(SvmError::Ragged { row, expected: p, found: f.len() });
            }
        }
        Ok(Self { features, labels, intercept })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Raw feature count.
    pub fn p(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    /// Model dimension including the intercept.
    pub fn p_tilde(&self) -> usize {
        self.p() + usize::from(self.intercept)
    }

    /// `ã_i`: features with a leading 1 when the intercept is on.
    pub fn augmented(&self, i: usize) -> Vec<f64> {
        let mut a = Vec::with_capacity(self.p_tilde());
        if self.intercept {
            a.push(1.0);
        }
        a.extend_from_slice(&self.features[i]);
        a
    }

    /// Row `y_i · ã_i` of the signed matrix.
    pub fn signed_row(&self, i: usize) -> Vec<f64> {
        let y = self.labels[i];
        self.augmented(i).into_iter().map(|v| y * v).collect()
    }

    pub fn signed_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.signed_row(i)).collect()
    }

    pub fn signed_matrix(&self) -> DMatrix<f64> {
        let (n, p) = (self.n(), self.p_tilde());
        let rows = self.signed_rows();
        DMatrix::from_fn(n, p, |i, j| rows[i][j])
    }

    pub fn subset(&self, idx: &[usize]) -> SvmDataset {
        SvmDataset {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            intercept: self.intercept,
        }
    }

    /// Multiplies every feature by `c`.
    pub fn scaled(&self, c: f64) -> SvmDataset {
        SvmDataset {
            features: self.features.iter().map(|f| f.iter().map(|v| v * c).collect()).collect(),
            labels: self.labels.clone(),
            intercept: self.intercept,
        }
    }

    /// Column means and standard deviations of the raw features.
    pub fn feature_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let (n, p) = (self.n() as f64, self.p());
        let mean: Vec<f64> = (0..p).map(|j| self.features.iter().map(|f| f[j]).sum::<f64>() / n).collect();
        let sd = (0..p)
            .map(|j| (self.features.iter().map(|f| (f[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        (mean, sd)
    }

    /// Applies a feature-wise affine standardisation computed elsewhere.
    pub fn standardized_with(&self, mean: &[f64], sd: &[f64]) -> SvmDataset {
        SvmDataset {
            features: self
                .features
                .iter()
                .map(|f| {
                    f.iter()
                        .enumerate()
                        .map(|(j, v)| if sd[j] > 0.0 { (v - mean[j]) / sd[j] } else { v - mean[j] })
                        .collect()
                })
                .collect(),
            labels: self.labels.clone(),
            intercept: self.intercept,
        }
    }
}

/// A collection `ℒ` of index subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCollection {
    pub subsets: Vec<Vec<usize>>,
    pub generator: String,
}

pub const DEFAULT_SUBSET_CAP: usize = 200_000;

fn combinations(n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else { return };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

impl SubsetCollection {
    pub fn custom(n: usize, subsets: Vec<Vec<usize>>) -> Result<Self, SvmError> {
        let mut seen = std::collections::BTreeSet::new();
        for s in &subsets {
            if s.is_empty() {
                return Err(SvmError::BadSubsets("empty subset".into()));
            }
            if s.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SvmError::BadSubsets(format!("{s:?} is not sorted and deduplicated")));
            }
            if s.iter().any(|&i| i >= n) {
                return Err(SvmError::BadSubsets(format!("{s:?} has an index ≥ {n}")));
            }
            if !seen.insert(s.clone()) {
                return Err(SvmError::BadSubsets(format!("{s:?} appears twice")));
            }
        }
        Ok(Self { subsets, generator: "custom".into() })
    }

    pub fn singletons(n: usize) -> Self {
        Self { subsets: (0..n).map(|i| vec![i]).collect(), generator: "singletons".into() }
    }

    /// All pairs only, the conic2 preset.
    pub fn pairs(n: usize) -> Self {
        let mut subsets = Vec::new();
        combinations(n, 2, &mut subsets);
        Self { subsets, generator: "pairs".into() }
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }
}

/// All subsets with `1 ≤ |L| ≤ κ`, ordered by size then lexicographically.
pub fn subsets_up_to(n: usize, kappa: usize, cap: usize) -> Result<SubsetCollection, SvmError> {
    let count: usize = (1..=kappa).map(|k| binomial(n, k)).fold(0, usize::saturating_add);
    if count > cap {
        return Err(SvmError::TooLarge { count, cap });
    }
    let mut subsets = Vec::with_capacity(count);
    for k in 1..=kappa {
        combinations(n, k, &mut subsets);
    }
    Ok(SubsetCollection { subsets, generator: format!("up-to-{kappa}") })
}

#[cfg(feature = "solver")]
pub(crate) fn all_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    combinations(n, k, &mut out);
    out
}

/// A trained linear classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub method: String,
    pub hyperparameters: BTreeMap<String, f64>,
    pub w: Vec<f64>,
    pub objective: f64,
    pub seed: Option<u64>,
}

impl Estimator {
    pub fn norm(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn score(&self, ds: &SvmDataset, i: usize) -> f64 {
        ds.augmented(i).iter().zip(&self.w).map(|(a, w)| a * w).sum()
    }
}

/// Recovers `w` from a solved program: the `w` group, or `w_pos − w_neg`.
pub fn extract_estimator(sol: &Solution, prog: &ConicProgram) -> Result<Estimator, SvmError> {
    if sol.status != SolveStatus::Optimal {
        return Err(SvmError::StatusNotOptimal(sol.status));
    }
    extract_weights(&sol.primal, prog).map(|w| Estimator {
        method: prog.meta.name.clone(),
        hyperparameters: BTreeMap::new(),
        w,
        objective: sol.objective,
        seed: None,
    })
}

/// Weight slice of a primal vector, regardless of solve status.
pub fn extract_weights(primal: &[f64], prog: &ConicProgram) -> Result<Vec<f64>, SvmError> {
    if let Some(r) = prog.meta.group("w") {
        return Ok(primal[r].to_vec());
    }
    match (prog.meta.group("w_pos"), prog.meta.group("w_neg")) {
        (Some(a), Some(b)) => Ok(primal[a].iter().zip(&primal[b]).map(|(p, m)| p - m).collect()),
        _ => Err(SvmError::NoWeights),
    }
}

/// Fraction of points with `y_i · ã_iᵀw ≤ 0`; ties count as errors.
pub fn misclassification_rate(est: &Estimator, ds: &SvmDataset) -> f64 {
    if ds.n() == 0 {
        return 0.0;
    }
    misclassified_count(&est.w, ds) as f64 / ds.n() as f64
}

pub fn misclassified_count(w: &[f64], ds: &SvmDataset) -> usize {
    (0..ds.n()).filter(|&i| margin(w, ds, i) <= 0.0).count()
}

/// `#{i : y_i · ã_iᵀw < 1}`.
pub fn margin_violations(w: &[f64], ds: &SvmDataset) -> usize {
    (0..ds.n()).filter(|&i| margin(w, ds, i) < 1.0).count()
}

fn margin(w: &[f64], ds: &SvmDataset, i: usize) -> f64 {
    ds.signed_row(i).iter().zip(w).map(|(a, b)| a * b).sum()
}

/// `‖w‖² + Σ φ(1 − y_i ã_iᵀw; d_i, λ)`.
pub fn phi_objective(w: &[f64], ds: &SvmDataset, dvec: &[f64], lambda: f64) -> Result<f64, SvmError> {
    if dvec.len() != ds.n() {
        return Err(SvmError::BadParameter(format!("dvec has length {}, expected {}", dvec.len(), ds.n())));
    }
    let mut total: f64 = w.iter().map(|v| v * v).sum();
    for i in 0..ds.n() {
        let params = LossParams::new(dvec[i], lambda).map_err(|e| SvmError::BadParameter(e.to_string()))?;
        total += phi_loss(1.0 - margin(w, ds, i), &params).map_err(|e| SvmError::BadParameter(e.to_string()))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SvmDataset {
        SvmDataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.5], vec![0.2, 2.0]], vec![1.0, -1.0, 1.0], true).unwrap()
    }

    #[test]
    fn signed_rows_prepend_intercept() {
        let ds = toy();
        assert_eq!(ds.p_tilde(), 3);
        assert_eq!(ds.signed_row(1), vec![-1.0, 1.0, -0.5]);
        let a = ds.signed_matrix();
        assert_eq!(a[(1, 2)], -0.5);
        assert_eq!(a[(2, 0)], 1.0);
    }

    #[test]
    fn rejects_bad_labels_and_ragged_rows() {
        assert_eq!(SvmDataset::new(vec![vec![1.0]], vec![0.5], true), Err(SvmError::BadLabel(0.5)));
        assert!(matches!(
            SvmDataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1.0, 1.0], true),
            Err(SvmError::Ragged { row: 1, .. })
        ));
    }

    #[test]
    fn subset_generators() {
        assert_eq!(subsets_up_to(3, 1, 100).unwrap().subsets, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(SubsetCollection::pairs(3).subsets, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets_up_to(3, 2, 100).unwrap().len(), 6);
        assert_eq!(subsets_up_to(30, 3, 100), Err(SvmError::TooLarge { count: 30 + 435 + 4060, cap: 100 }));
        assert!(SubsetCollection::custom(3, vec![vec![1, 0]]).is_err());
        assert!(SubsetCollection::custom(3, vec![vec![0], vec![0]]).is_err());
        assert_eq!(all_combinations(4, 3).len(), 4);
        assert_eq!(all_combinations(2, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn rates() {
        let ds = toy();
        let zero = Estimator { method: "zero".into(), hyperparameters: BTreeMap::new(), w: vec![0.0; 3], objective: 0.0, seed: None };
        assert_eq!(misclassification_rate(&zero, &ds), 1.0);
        let good = Estimator { w: vec![0.0, 2.0, 1.0], ..zero.clone() };
        assert_eq!(misclassified_count(&good.w, &ds), 0);
        // margins: 2, 1.5, 2.4
        assert_eq!(margin_violations(&good.w, &ds), 0);
        assert_eq!(misclassification_rate(&good, &ds), 0.0);
    }

    #[test]
    fn phi_objective_cases() {
        let ds = toy();
        let w = vec![0.0, 2.0, 1.0];
        assert_eq!(phi_objective(&w, &ds, &[1.0; 3], 1.0).unwrap(), 5.0);
        // Single point with margin violation exactly √(λ/d).
        let one = SvmDataset::new(vec![vec![1.0]], vec![1.0], false).unwrap();
        let (d, l) = (0.25f64, 4.0);
        let x = (l / d).sqrt();
        let w1 = vec![1.0 - x];
        assert_eq!(phi_objective(&w1, &one, &[d], l).unwrap(), w1[0] * w1[0] + l);
    }

    #[test]
    fn phi_objective_matches_z_grid() {
        let ds = toy();
        let w = vec![0.3, -0.4, 0.7];
        let (dvec, l) = ([0.2, 0.5, 0.1], 0.8);
        let mut grid_total: f64 = w.iter().map(|v| v * v).sum();
        for i in 0..ds.n() {
            let x = 1.0 - ds.signed_row(i).iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
            let p = LossParams::new(dvec[i], l).unwrap();
            let best = (0..=10_000)
                .map(|k| crate::hull::phi_inner(x, k as f64 * 1e-4, &p))
                .fold(f64::INFINITY, f64::min);
            grid_total += best;
        }
        let closed = phi_objective(&w, &ds, &dvec, l).unwrap();
        assert!((closed - grid_total).abs() < 1e-4, "{closed} vs {grid_total}");
    }
}
