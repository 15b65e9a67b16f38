use serde::{Deserialize, Serialize};

use super::{gap, run_ordered, train, DataSource, ExperimentConfig, HarnessError, Hyper, Method};
use crate::conic::{export_mps, SolveStatus};
use crate::datagen::{generate, load_csv, substream_seed, GenSpec};
use crate::relaxations::{build_bigm_model, DEFAULT_BIG_M};
use crate::solver::SolverError;
use crate::svm::{misclassified_count, SvmDataset, SvmMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: usize,
    pub seed: u64,
    pub method: Method,
    pub hyperparameter: f64,
    pub bound: Option<f64>,
    pub reference: Option<f64>,
    pub gap: Option<f64>,
    pub gap_anomaly: bool,
    pub status: String,
    pub train_rate: Option<f64>,
    pub seconds: f64,
    /// Free-form detail, e.g. the path written by `bigm-export`.
    pub note: String,
}

pub(crate) fn instance_dataset(cfg: &ExperimentConfig, r: usize) -> Result<(SvmDataset, u64), HarnessError> {
    let seed = substream_seed(cfg.seed, r as u64);
    match &cfg.source {
        DataSource::Generate(spec) => {
            let spec = GenSpec { seed, ..spec.clone() };
            Ok((generate(&spec)?.dataset, seed))
        }
        DataSource::Csv(path) => Ok((load_csv(path)?, seed)),
    }
}

fn one_row(cfg: &ExperimentConfig, r: usize, seed: u64, ds: &SvmDataset, method: Method) -> BenchRow {
    let mut row = BenchRow {
        instance: r,
        seed,
        method,
        hyperparameter: cfg.k,
        bound: None,
        reference: None,
        gap: None,
        gap_anomaly: false,
        status: String::new(),
        train_rate: None,
        seconds: 0.0,
        note: String::new(),
    };
    if method == Method::BigmExport {
        let res = (|| -> Result<String, HarnessError> {
            let dir = cfg.out_dir.as_ref().ok_or_else(|| HarnessError::InvalidConfig("bigm-export needs an output directory".into()))?;
            let prog = build_bigm_model(ds, DEFAULT_BIG_M, SvmMode::Cardinality(cfg.k))
                .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
            let text = export_mps(&prog).map_err(|e| HarnessError::Io(e.to_string()))?;
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("bigm-{r}.mps"));
            std::fs::write(&path, text)?;
            Ok(path.display().to_string())
        })();
        match res {
            Ok(p) => {
                row.status = "Exported".into();
                row.note = p;
            }
            Err(e) => row.status = format!("Error: {e}"),
        }
        return row;
    }
    match train(method, ds, Hyper::K(cfg.k), &cfg.solver) {
        Ok(t) => {
            row.seconds = t.seconds;
            row.status = format!("{:?}", t.status);
            if t.status == SolveStatus::Optimal {
                row.bound = Some(t.lower_bound);
                row.train_rate = Some(misclassified_count(&t.w, ds) as f64 / ds.n() as f64);
            }
        }
        Err(HarnessError::Solver(SolverError::Failed { status: SolveStatus::Infeasible, .. })) => {
            row.status = "Infeasible".into()
        }
        Err(e) => row.status = format!("Error: {e}"),
    }
    row
}

/// Bounds of each relaxation on seeded instances, with gaps measured
/// against the exact 0–1 oracle when `exact` is among the methods.
pub fn run_bound_experiment(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>, HarnessError> {
    cfg.validate()?;
    if let Some(m) = cfg.methods.iter().find(|m| matches!(m, Method::Hinge | Method::RobustL1 | Method::HingeConic1)) {
        return Err(HarnessError::InvalidConfig(format!("{m} does not produce a lower bound")));
    }
    let instances: Vec<(usize, SvmDataset, u64)> = (0..cfg.replications)
        .map(|r| instance_dataset(cfg, r).map(|(ds, s)| (r, ds, s)))
        .collect::<Result<_, _>>()?;
    let tasks: Vec<(usize, Method)> =
        (0..instances.len()).flat_map(|i| cfg.methods.iter().map(move |&m| (i, m))).collect();
    let mut rows = run_ordered(cfg.threads, tasks, |(i, m)| {
        let (r, ds, seed) = &instances[i];
        one_row(cfg, *r, *seed, ds, m)
    })?;
    for chunk in rows.chunks_mut(cfg.methods.len()) {
        let reference = chunk.iter().find(|row| row.method == Method::Exact).and_then(|row| row.bound);
        for row in chunk.iter_mut() {
            row.reference = reference;
            if let (Some(z), Some(b)) = (reference, row.bound) {
                if let Ok(g) = gap(z, b) {
                    row.gap = Some(g.value);
                    row.gap_anomaly = g.negative_anomaly;
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::OutlierClass;

    fn cfg(methods: Vec<Method>, reps: usize) -> ExperimentConfig {
        ExperimentConfig {
            methods,
            replications: reps,
            seed: 3,
            k: 2.0,
            source: DataSource::Generate(GenSpec { outlier_class: OutlierClass::Clustered, n: 8, p: 2, sigma: 0.5, seed: 0 }),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn conic1_gap_in_unit_interval() {
        let rows = run_bound_experiment(&cfg(vec![Method::Conic1, Method::Exact], 2)).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            let g = row.gap.unwrap_or_else(|| panic!("{rows:?}"));
            assert!((-1e-6..1.0).contains(&g), "{row:?}");
            assert!(!row.gap_anomaly);
        }
    }

    #[test]
    fn bigm_export_records_path() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg(vec![Method::BigmExport], 1);
        c.out_dir = Some(dir.path().to_path_buf());
        let rows = run_bound_experiment(&c).unwrap();
        assert_eq!(rows[0].bound, None);
        assert!(std::path::Path::new(&rows[0].note).exists());
    }

    #[test]
    fn rejects_non_bounding_methods() {
        assert!(run_bound_experiment(&cfg(vec![Method::Hinge], 1)).is_err());
    }
}
