//! Experiment drivers: bound benchmarking against the exact oracle and
//! cross-validated model selection.
//!
//! Work items are evaluated on a dedicated rayon pool and collected in task
//! order, so result files do not depend on the thread count.

pub mod checks;
mod bound;
mod cv;
mod table;

pub use bound::{run_bound_experiment, BenchRow};
pub use cv::{hinge_lambda_grid, k_grid, run_cv, CvReport, CvRow, CvSummary};
pub use table::{bench_csv, bench_markdown, cv_csv, cv_markdown, timings_csv};

use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::SolveStatus;
use crate::datagen::{DataError, GenSpec};
use crate::solver::{exact_01_svm, solve, SolverConfig, SolverError};
use crate::svm::{
    build_conic_relaxation, build_decomposition_relaxation, build_hinge, build_robust_l1, default_decomposition_d,
    extract_weights, SubsetCollection, SvmDataset, SvmError, SvmMode,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("gap undefined for reference value {0}")]
    UndefinedGap(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "hinge")]
    Hinge,
    #[serde(rename = "robust-l1")]
    RobustL1,
    #[serde(rename = "conic1")]
    Conic1,
    #[serde(rename = "conic2")]
    Conic2,
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "bigm-export")]
    BigmExport,
    #[serde(rename = "decomposition")]
    Decomposition,
    #[serde(rename = "hinge+conic1")]
    HingeConic1,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Hinge,
        Method::RobustL1,
        Method::Conic1,
        Method::Conic2,
        Method::Exact,
        Method::BigmExport,
        Method::Decomposition,
        Method::HingeConic1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Hinge => "hinge",
            Method::RobustL1 => "robust-l1",
            Method::Conic1 => "conic1",
            Method::Conic2 => "conic2",
            Method::Exact => "exact",
            Method::BigmExport => "bigm-export",
            Method::Decomposition => "decomposition",
            Method::HingeConic1 => "hinge+conic1",
        }
    }

    /// Methods whose hyperparameter is a cardinality `k` in cross-validation.
    pub fn uses_k(self) -> bool {
        matches!(self, Method::Conic1 | Method::Conic2 | Method::Exact | Method::Decomposition)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| HarnessError::InvalidConfig(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Generate(GenSpec),
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub grid_size: usize,
    pub replications: usize,
    pub seed: u64,
    pub source: DataSource,
    /// Cardinality `k` for the bound experiment.
    pub k: f64,
    /// Size of the outlier-free test set drawn for generated sources.
    pub test_size: usize,
    /// Label-flip probability applied to train and validation sets.
    pub flip_tau: f64,
    pub out_dir: Option<PathBuf>,
    pub solver: SolverConfig,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Hinge, Method::Conic1],
            grid_size: 100,
            replications: 1,
            seed: 0,
            source: DataSource::Generate(GenSpec {
                outlier_class: crate::datagen::OutlierClass::None,
                n: 100,
                p: 2,
                sigma: 0.5,
                seed: 0,
            }),
            k: 2.0,
            test_size: 10_000,
            flip_tau: 0.0,
            out_dir: None,
            solver: SolverConfig::default(),
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.grid_size == 0 {
            return Err(HarnessError::InvalidConfig("grid_size must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::InvalidConfig("no methods".into()));
        }
        if self.replications == 0 {
            return Err(HarnessError::InvalidConfig("replications must be at least 1".into()));
        }
        Ok(())
    }
}

/// Relative reference gap `(ζ_ref − ζ_relax)/ζ_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub value: f64,
    /// Set when the relaxation exceeds the reference by more than `1e−6`
    /// (relative), which means the bound is wrong.
    pub negative_anomaly: bool,
}

pub fn gap(zeta_ref: f64, zeta_relax: f64) -> Result<Gap, HarnessError> {
    if !(zeta_ref > 0.0) {
        return Err(HarnessError::UndefinedGap(zeta_ref));
    }
    let value = (zeta_ref - zeta_relax) / zeta_ref;
    Ok(Gap { value, negative_anomaly: value < -1e-6 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Hyper {
    Lambda(f64),
    K(f64),
}

impl Hyper {
    pub fn value(self) -> f64 {
        match self {
            Hyper::Lambda(v) | Hyper::K(v) => v,
        }
    }

    fn mode(self) -> SvmMode {
        match self {
            Hyper::Lambda(l) => SvmMode::Penalty(l),
            Hyper::K(k) => SvmMode::Cardinality(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trained {
    pub w: Vec<f64>,
    pub objective: f64,
    /// Smaller of the primal and dual objectives; the exact oracle reports
    /// its objective.
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub seconds: f64,
}

/// Fits one method at one hyperparameter. A `NumericalFailure` still
/// yields the solver's last iterate.
pub fn train(method: Method, ds: &SvmDataset, hyper: Hyper, cfg: &SolverConfig) -> Result<Trained, HarnessError> {
    let start = Instant::now();
    let lambda = || match hyper {
        Hyper::Lambda(l) => Ok(l),
        Hyper::K(_) => Err(HarnessError::InvalidConfig(format!("{method} takes lambda, not k"))),
    };
    let prog = match method {
        Method::Hinge => build_hinge(ds, lambda()?)?,
        Method::RobustL1 => build_robust_l1(ds, lambda()?)?,
        Method::Conic1 => build_conic_relaxation(ds, &SubsetCollection::singletons(ds.n()), hyper.mode())?.0,
        Method::Conic2 => build_conic_relaxation(ds, &SubsetCollection::pairs(ds.n()), hyper.mode())?.0,
        Method::Decomposition => build_decomposition_relaxation(ds, &default_decomposition_d(ds), hyper.mode())?,
        Method::Exact => {
            let r = exact_01_svm(ds, hyper.mode(), cfg)?;
            return Ok(Trained {
                w: r.w,
                objective: r.objective,
                lower_bound: r.objective,
                status: SolveStatus::Optimal,
                seconds: start.elapsed().as_secs_f64(),
            });
        }
        Method::BigmExport | Method::HingeConic1 => {
            return Err(HarnessError::InvalidConfig(format!("{method} cannot be trained directly")))
        }
    };
    let sol = solve(&prog, cfg)?;
    match sol.status {
        SolveStatus::Optimal | SolveStatus::NumericalFailure => Ok(Trained {
            w: extract_weights(&sol.primal, &prog)?,
            objective: sol.objective,
            lower_bound: sol.objective.min(sol.dual_objective),
            status: sol.status,
            seconds: start.elapsed().as_secs_f64(),
        }),
        status => Err(SolverError::Failed { status, detail: sol.stats.backend_status }.into()),
    }
}

/// Evaluates `f` over `items` on a pool of `threads` workers (0 = default)
/// and returns results in input order.
pub fn run_ordered<T, R, F>(threads: usize, items: Vec<T>, f: F) -> Result<Vec<R>, HarnessError>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    Ok(pool.install(|| items.into_par_iter().map(f).collect()))
}

/// Compact, round-trippable number text used in result files.
pub(crate) fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.10e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(gap(10.0, 10.0).unwrap().value, 0.0);
        assert_eq!(gap(10.0, 5.0).unwrap().value, 0.5);
        assert!(gap(10.0, 10.001).unwrap().negative_anomaly);
        assert!(!gap(10.0, 10.000_000_01).unwrap().negative_anomaly);
        assert!(matches!(gap(0.0, 1.0), Err(HarnessError::UndefinedGap(_))));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn ordered_results_match_input() {
        let out = run_ordered(3, (0..100).collect(), |i: usize| i * i).unwrap();
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn train_hinge_separable() {
        let ds = SvmDataset::new(vec![vec![1.0], vec![-1.0]], vec![1.0, -1.0], false).unwrap();
        let t = train(Method::Hinge, &ds, Hyper::Lambda(10.0), &SolverConfig::default()).unwrap();
        assert!((t.w[0] - 1.0).abs() < 1e-6);
        assert!(train(Method::Hinge, &ds, Hyper::K(1.0), &SolverConfig::default()).is_err());
    }
}
