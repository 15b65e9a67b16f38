//! Exact 0–1 loss SVM by subset enumeration over hard-margin subproblems.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve, SolverConfig, SolverError};
use crate::conic::{AffineExpr, ProgramBuilder, SolveStatus};
pub use crate::svm::SvmMode;
use crate::svm::{all_combinations, SvmDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HardMargin {
    Infeasible,
    Solved { w: Vec<f64>, objective: f64 },
}

impl HardMargin {
    pub fn objective(&self) -> Option<f64> {
        match self {
            HardMargin::Solved { objective, .. } => Some(*objective),
            HardMargin::Infeasible => None,
        }
    }
}

/// `min ‖w‖²` s.t. `rowᵀw ≥ 1` for every row, solved as a QP.
pub fn solve_hard_margin(rows: &[Vec<f64>], dim: usize, cfg: &SolverConfig) -> Result<HardMargin, SolverError> {
    if rows.is_empty() {
        return Ok(HardMargin::Solved { w: vec![0.0; dim], objective: 0.0 });
    }
    let mut b = ProgramBuilder::new("hard-margin");
    let w = b.add_group("w", dim);
    let lin: Vec<AffineExpr> = rows
        .iter()
        .map(|r| {
            let mut e = AffineExpr::constant(-1.0);
            for (k, &a) in r.iter().enumerate() {
                if a != 0.0 {
                    e.add_term(w[k], a);
                }
            }
            e
        })
        .collect();
    b.add_nonneg(lin).map_err(|e| SolverError::InvalidProgram(e.to_string()))?;
    for &v in &w {
        b.add_quadratic(v, v, 1.0);
    }
    let p = b.finish();
    let s = solve(&p, cfg)?;
    match s.status {
        SolveStatus::Optimal => {
            let wv = s.primal[..dim].to_vec();
            let objective = wv.iter().map(|v| v * v).sum();
            Ok(HardMargin::Solved { w: wv, objective })
        }
        SolveStatus::Infeasible => Ok(HardMargin::Infeasible),
        // Reduced-accuracy exits: keep the iterate when it is feasible.
        SolveStatus::NumericalFailure if s.stats.backend_status == "AlmostSolved" => {
            let wv = s.primal[..dim].to_vec();
            let worst = rows.iter().map(|r| 1.0 - r.iter().zip(&wv).map(|(a, b)| a * b).sum::<f64>()).fold(f64::MIN, f64::max);
            if worst <= 1e-7 {
                let objective = wv.iter().map(|v| v * v).sum();
                Ok(HardMargin::Solved { w: wv, objective })
            } else {
                Err(SolverError::Failed { status: s.status, detail: s.stats.backend_status })
            }
        }
        SolveStatus::NumericalFailure if s.stats.backend_status == "AlmostPrimalInfeasible" => Ok(HardMargin::Infeasible),
        status => Err(SolverError::Failed { status, detail: s.stats.backend_status }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSvmResult {
    pub objective: f64,
    pub w: Vec<f64>,
    /// Misclassified set, sorted.
    pub misclassified: Vec<usize>,
    pub mode: SvmMode,
    pub subproblems: usize,
}

pub const MAX_CARDINALITY_SUBSETS: usize = 1_000_000;
pub const MAX_PENALTY_N: usize = 22;

fn binom(n: usize, k: usize) -> usize {
    (0..k.min(n)).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Evaluates every subset of one size in parallel, then reduces in
/// lexicographic order so the result is independent of thread count.
fn best_of_size(
    ds: &SvmDataset,
    rows: &[Vec<f64>],
    size: usize,
    cfg: &SolverConfig,
) -> Result<(Option<(f64, Vec<f64>, Vec<usize>)>, usize), SolverError> {
    let subsets = all_combinations(ds.n(), size);
    let count = subsets.len();
    let results: Vec<Result<(Vec<usize>, HardMargin), SolverError>> = subsets
        .into_par_iter()
        .map(|s| {
            let kept: Vec<Vec<f64>> =
                (0..ds.n()).filter(|i| s.binary_search(i).is_err()).map(|i| rows[i].clone()).collect();
            solve_hard_margin(&kept, ds.p_tilde(), cfg).map(|r| (s, r))
        })
        .collect();
    let mut best: Option<(f64, Vec<f64>, Vec<usize>)> = None;
    for r in results {
        let (s, hm) = r?;
        if let HardMargin::Solved { w, objective } = hm {
            let better = match &best {
                None => true,
                Some((b, ..)) => objective < *b - 1e-9 * (1.0 + b.abs()),
            };
            if better {
                best = Some((objective, w, s));
            }
        }
    }
    Ok((best, count))
}

pub fn exact_01_svm(ds: &SvmDataset, mode: SvmMode, cfg: &SolverConfig) -> Result<ExactSvmResult, SolverError> {
    let n = ds.n();
    let rows = ds.signed_rows();
    match mode {
        SvmMode::Cardinality(k) => {
            if !(k >= 0.0) {
                return Err(SolverError::InvalidConfig(format!("k = {k}")));
            }
            let size = (k.floor() as usize).min(n);
            let count = binom(n, size);
            if count > MAX_CARDINALITY_SUBSETS {
                return Err(SolverError::TooLarge(format!("C({n},{size}) = {count}")));
            }
            let (best, subproblems) = best_of_size(ds, &rows, size, cfg)?;
            let (objective, w, misclassified) = best.ok_or_else(|| {
                SolverError::Failed { status: SolveStatus::Infeasible, detail: format!("no feasible subset of size {size}") }
            })?;
            Ok(ExactSvmResult { objective, w, misclassified, mode, subproblems })
        }
        SvmMode::Penalty(lambda) => {
            if n > MAX_PENALTY_N {
                return Err(SolverError::TooLarge(format!("n = {n} > {MAX_PENALTY_N}")));
            }
            if !(lambda >= 0.0) {
                return Err(SolverError::InvalidConfig(format!("lambda = {lambda}")));
            }
            let mut incumbent: Option<(f64, Vec<f64>, Vec<usize>)> = None;
            let mut subproblems = 0;
            for size in 0..=n {
                let bound = lambda * size as f64;
                if let Some((v, ..)) = &incumbent {
                    if bound >= *v {
                        break;
                    }
                }
                let (best, count) = best_of_size(ds, &rows, size, cfg)?;
                subproblems += count;
                if let Some((obj, w, s)) = best {
                    let total = obj + bound;
                    let better = match &incumbent {
                        None => true,
                        Some((v, ..)) => total < *v - 1e-9 * (1.0 + v.abs()),
                    };
                    if better {
                        incumbent = Some((total, w, s));
                    }
                }
            }
            let (objective, w, misclassified) = incumbent.expect("dropping every point is always feasible");
            Ok(ExactSvmResult { objective, w, misclassified, mode, subproblems })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn hard_margin_examples() {
        assert_eq!(solve_hard_margin(&[], 2, &cfg()).unwrap(), HardMargin::Solved { w: vec![0.0, 0.0], objective: 0.0 });
        assert_eq!(solve_hard_margin(&[vec![1.0], vec![-1.0]], 1, &cfg()).unwrap(), HardMargin::Infeasible);
        match solve_hard_margin(&[vec![2.0]], 1, &cfg()).unwrap() {
            HardMargin::Solved { w, objective } => {
                assert!((w[0] - 0.5).abs() < 1e-6);
                assert!((objective - 0.25).abs() < 1e-6);
            }
            r => panic!("{r:?}"),
        }
    }

    #[test]
    fn one_dimensional_cardinality() {
        let ds = SvmDataset::new(vec![vec![1.0], vec![1.0]], vec![1.0, -1.0], false).unwrap();
        let r = exact_01_svm(&ds, SvmMode::Cardinality(1.0), &cfg()).unwrap();
        assert!((r.objective - 1.0).abs() < 1e-6, "{r:?}");
        // Dropping either point leaves |w| = 1; ties keep the first subset.
        assert_eq!(r.misclassified, vec![0]);
        let all = exact_01_svm(&ds, SvmMode::Cardinality(2.0), &cfg()).unwrap();
        assert_eq!(all.objective, 0.0);
    }

    #[test]
    fn penalty_mode_prunes() {
        let ds = SvmDataset::new(vec![vec![1.0], vec![1.0], vec![2.0]], vec![1.0, -1.0, 1.0], false).unwrap();
        let r = exact_01_svm(&ds, SvmMode::Penalty(10.0), &cfg()).unwrap();
        // Drop point 1, then w = 1 → 1 + 10.
        assert!((r.objective - 11.0).abs() < 1e-6, "{r:?}");
        assert_eq!(r.misclassified, vec![1]);
        let cheap = exact_01_svm(&ds, SvmMode::Penalty(0.1), &cfg()).unwrap();
        // Dropping everything costs 0.3; keeping only point 2 costs 0.25 + 0.2.
        assert!((cheap.objective - 0.3).abs() < 1e-6, "{cheap:?}");
        assert_eq!(cheap.misclassified, vec![0, 1, 2]);
    }
}
