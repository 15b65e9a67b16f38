use serde::{Deserialize, Serialize};

use super::{run_ordered, train, DataSource, ExperimentConfig, HarnessError, Hyper, Method};
use crate::datagen::{draw_direction, flip_labels, load_csv, sample_points, split, substream_seed, OutlierClass};
use crate::svm::{misclassified_count, SvmDataset};

/// `λ_j = β_j/(1 − β_j)` with `β_j = j/(G+1)`, `j = 1..G`.
pub fn hinge_lambda_grid(g: usize) -> Vec<f64> {
    (1..=g)
        .map(|j| {
            let beta = j as f64 / (g + 1) as f64;
            beta / (1.0 - beta)
        })
        .collect()
}

/// `k_j = j·(n/2)/(G+1)`, `j = 1..G`.
pub fn k_grid(n: usize, g: usize) -> Vec<f64> {
    (1..=g).map(|j| j as f64 * (n as f64 / 2.0) / (g + 1) as f64).collect()
}

fn candidates(method: Method, n: usize, g: usize) -> Vec<(Method, Hyper)> {
    let lambdas = |m: Method, g: usize| hinge_lambda_grid(g).into_iter().map(move |l| (m, Hyper::Lambda(l)));
    let ks = |m: Method, g: usize| k_grid(n, g).into_iter().map(move |k| (m, Hyper::K(k)));
    match method {
        Method::HingeConic1 => lambdas(Method::Hinge, g / 2).chain(ks(Method::Conic1, g - g / 2)).collect(),
        m if m.uses_k() => ks(m, g).collect(),
        m => lambdas(m, g).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub replication: usize,
    pub seed: u64,
    pub method: String,
    pub chosen_index: Option<usize>,
    /// `lambda` or `k`.
    pub hyper_kind: String,
    pub hyperparameter: Option<f64>,
    pub val_errors: Option<usize>,
    pub train_rate: Option<f64>,
    pub val_rate: Option<f64>,
    pub test_rate: Option<f64>,
    pub norm: Option<f64>,
    pub failures: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub method: String,
    pub replications: usize,
    pub mean_test_rate: f64,
    pub sd_test_rate: f64,
    pub mean_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub rows: Vec<CvRow>,
    pub summary: Vec<CvSummary>,
}

impl CvReport {
    pub fn summary_for(&self, method: &str) -> Option<&CvSummary> {
        self.summary.iter().find(|s| s.method == method)
    }
}

struct Split {
    seed: u64,
    train: SvmDataset,
    val: SvmDataset,
    test: SvmDataset,
    bayes_w: Option<Vec<f64>>,
}

fn make_split(cfg: &ExperimentConfig, r: usize) -> Result<Split, HarnessError> {
    let seed = substream_seed(cfg.seed, r as u64);
    let child = |k: u64| substream_seed(seed, k);
    let (mut train, mut val, test, bayes_w) = match &cfg.source {
        DataSource::Generate(spec) => {
            spec.validate()?;
            let d = draw_direction(spec.p, seed)?;
            let train = sample_points(spec.outlier_class, &d, spec.n, spec.sigma, child(1));
            let val = sample_points(spec.outlier_class, &d, spec.n, spec.sigma, child(2));
            let test = sample_points(OutlierClass::None, &d, cfg.test_size, spec.sigma, child(3));
            let mut bw = vec![0.0];
            bw.extend(d);
            (train, val, test, Some(bw))
        }
        DataSource::Csv(path) => {
            let [a, b, c] = split(&load_csv(path)?, (0.35, 0.35, 0.30), child(0))?;
            (a, b, c, None)
        }
    };
    if cfg.flip_tau > 0.0 {
        train = flip_labels(&train, cfg.flip_tau, child(4))?;
        val = flip_labels(&val, cfg.flip_tau, child(5))?;
    }
    Ok(Split { seed, train, val, test, bayes_w })
}

fn rate(w: &[f64], ds: &SvmDataset) -> f64 {
    if ds.n() == 0 {
        0.0
    } else {
        misclassified_count(w, ds) as f64 / ds.n() as f64
    }
}

struct Fit {
    val_errors: usize,
    norm: f64,
    train_rate: f64,
    test_rate: f64,
}

/// Picks the fit with the fewest validation errors, then the smaller
/// `‖w‖`, then the earlier grid index.
fn select(fits: &[Option<Fit>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, f) in fits.iter().enumerate() {
        let Some(f) = f else { continue };
        let better = match best.and_then(|b| fits[b].as_ref()) {
            None => true,
            Some(b) => {
                f.val_errors < b.val_errors
                    || (f.val_errors == b.val_errors && f.norm < b.norm - 1e-9 * (1.0 + b.norm))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Trains each method over its hyperparameter grid on the training split,
/// selects by validation error, and reports test error.
pub fn run_cv(cfg: &ExperimentConfig) -> Result<CvReport, HarnessError> {
    cfg.validate()?;
    if let Some(m) = cfg.methods.iter().find(|m| **m == Method::BigmExport) {
        return Err(HarnessError::InvalidConfig(format!("{m} cannot be cross-validated")));
    }
    let splits: Vec<Split> = (0..cfg.replications).map(|r| make_split(cfg, r)).collect::<Result<_, _>>()?;
    let grids: Vec<Vec<Vec<(Method, Hyper)>>> = splits
        .iter()
        .map(|s| cfg.methods.iter().map(|&m| candidates(m, s.train.n(), cfg.grid_size)).collect())
        .collect();
    let mut tasks = Vec::new();
    for (r, per_method) in grids.iter().enumerate() {
        for (mi, cands) in per_method.iter().enumerate() {
            for ci in 0..cands.len() {
                tasks.push((r, mi, ci));
            }
        }
    }
    let results = run_ordered(cfg.threads, tasks, |(r, mi, ci)| {
        let sp = &splits[r];
        let (m, h) = grids[r][mi][ci];
        match train(m, &sp.train, h, &cfg.solver) {
            Ok(t) => (
                Some(Fit {
                    val_errors: misclassified_count(&t.w, &sp.val),
                    norm: t.w.iter().map(|v| v * v).sum::<f64>().sqrt(),
                    train_rate: rate(&t.w, &sp.train),
                    test_rate: rate(&t.w, &sp.test),
                }),
                t.seconds,
            ),
            Err(_) => (None, 0.0),
        }
    })?;

    let mut rows = Vec::new();
    let mut it = results.into_iter();
    for (r, sp) in splits.iter().enumerate() {
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let cands = &grids[r][mi];
            let (fits, secs): (Vec<Option<Fit>>, Vec<f64>) = it.by_ref().take(cands.len()).unzip();
            let chosen = select(&fits);
            let fit = chosen.and_then(|i| fits[i].as_ref());
            let hyper = chosen.map(|i| cands[i].1);
            rows.push(CvRow {
                replication: r,
                seed: sp.seed,
                method: method.to_string(),
                chosen_index: chosen,
                hyper_kind: match hyper {
                    Some(Hyper::K(_)) => "k".into(),
                    Some(Hyper::Lambda(_)) => "lambda".into(),
                    None => String::new(),
                },
                hyperparameter: hyper.map(Hyper::value),
                val_errors: fit.map(|f| f.val_errors),
                train_rate: fit.map(|f| f.train_rate),
                val_rate: fit.map(|f| f.val_errors as f64 / sp.val.n().max(1) as f64),
                test_rate: fit.map(|f| f.test_rate),
                norm: fit.map(|f| f.norm),
                failures: fits.iter().filter(|f| f.is_none()).count(),
                seconds: secs.iter().sum(),
            });
        }
        if let Some(bw) = &sp.bayes_w {
            rows.push(CvRow {
                replication: r,
                seed: sp.seed,
                method: "bayes".into(),
                chosen_index: None,
                hyper_kind: String::new(),
                hyperparameter: None,
                val_errors: Some(misclassified_count(bw, &sp.val)),
                train_rate: Some(rate(bw, &sp.train)),
                val_rate: Some(rate(bw, &sp.val)),
                test_rate: Some(rate(bw, &sp.test)),
                norm: Some(bw.iter().map(|v| v * v).sum::<f64>().sqrt()),
                failures: 0,
                seconds: 0.0,
            });
        }
    }
    let summary = summarize(&rows);
    Ok(CvReport { rows, summary })
}

fn summarize(rows: &[CvRow]) -> Vec<CvSummary> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.method.as_str()) {
            names.push(&r.method);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let sel: Vec<&CvRow> = rows.iter().filter(|r| r.method == name).collect();
            let rates: Vec<f64> = sel.iter().filter_map(|r| r.test_rate).collect();
            let k = rates.len().max(1) as f64;
            let mean = rates.iter().sum::<f64>() / k;
            let var = if rates.len() > 1 {
                rates.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rates.len() - 1) as f64
            } else {
                0.0
            };
            CvSummary {
                method: name.to_string(),
                replications: rates.len(),
                mean_test_rate: mean,
                sd_test_rate: var.sqrt(),
                mean_seconds: sel.iter().map(|r| r.seconds).sum::<f64>() / sel.len().max(1) as f64,
            }
        })
        .collect()
}
