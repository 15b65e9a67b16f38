//! Seeded synthetic instances, label flips, splits and CSV plumbing.
//!
//! Randomness comes from ChaCha8. Every consumer draws from its own stream
//! of the generator seeded with `seed`: point `i` uses stream `i`, the
//! direction uses stream `u64::MAX`. Normals are drawn with the ziggurat
//! sampler of `rand_distr::StandardNormal`.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::svm::SvmDataset;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("direction stayed degenerate after {0} draws")]
    DegenerateDirection(usize),
    #[error("flip probability {0} outside [0, 0.5)")]
    TauOutOfRange(f64),
    #[error("bad split fractions: {0}")]
    BadFractions(String),
    #[error("row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },
    #[error("row {row}: label {value} is not one of -1, 0, 1")]
    LabelDomain { row: usize, value: String },
    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for DataError {
    fn from(e: std::io::Error) -> Self {
        DataError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierClass {
    None,
    Clustered,
    Spread,
}

impl std::str::FromStr for OutlierClass {
    type Err = DataError;
    fn from_str(s: &str) -> Result<Self, DataError> {
        match s {
            "none" => Ok(OutlierClass::None),
            "clustered" => Ok(OutlierClass::Clustered),
            "spread" => Ok(OutlierClass::Spread),
            _ => Err(DataError::InvalidSpec(format!("unknown outlier class {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub outlier_class: OutlierClass,
    pub n: usize,
    pub p: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if self.n == 0 || self.p == 0 {
            return Err(DataError::InvalidSpec(format!("n = {}, p = {}", self.n, self.p)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(DataError::InvalidSpec(format!("sigma = {}", self.sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedInstance {
    pub dataset: SvmDataset,
    /// Raw direction `d`; the centroids are `±0.5 d/‖d‖`.
    pub direction: Vec<f64>,
    /// `(0, dᵀ)`.
    pub bayes_w: Vec<f64>,
    pub provenance: GenSpec,
}

const DIRECTION_STREAM: u64 = u64::MAX;
const DIRECTION_RETRIES: usize = 64;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// First word of stream `id`; used to derive independent child seeds.
pub fn substream_seed(seed: u64, id: u64) -> u64 {
    stream(seed, id).next_u64()
}

/// Draws `d` with entries uniform on `[−1, 1]`.
pub fn draw_direction(p: usize, seed: u64) -> Result<Vec<f64>, DataError> {
    let mut rng = stream(seed, DIRECTION_STREAM);
    for _ in 0..DIRECTION_RETRIES {
        let d: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        if d.iter().any(|&v| v != 0.0) {
            return Ok(d);
        }
    }
    Err(DataError::DegenerateDirection(DIRECTION_RETRIES))
}

fn centroid(direction: &[f64], sign: f64) -> Vec<f64> {
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    direction.iter().map(|v| sign * 0.5 * v / norm).collect()
}

fn gaussian(rng: &mut ChaCha8Rng, mean: &[f64], sd: f64) -> Vec<f64> {
    mean.iter()
        .map(|m| {
            let g: f64 = rng.sample(StandardNormal);
            m + sd * g
        })
        .collect()
}

/// One point of the given class, with its label.
fn draw_point(class: OutlierClass, pos: &[f64], neg: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let u: f64 = rng.gen();
    match class {
        OutlierClass::None => {
            if u < 0.5 {
                (gaussian(rng, pos, sigma), 1.0)
            } else {
                (gaussian(rng, neg, sigma), -1.0)
            }
        }
        OutlierClass::Clustered => {
            if u < 0.45 {
                (gaussian(rng, pos, sigma), 1.0)
            } else if u < 0.9 {
                (gaussian(rng, neg, sigma), -1.0)
            } else {
                let far: Vec<f64> = neg.iter().map(|v| 10.0 * v).collect();
                (gaussian(rng, &far, 0.001f64.sqrt() * sigma), 1.0)
            }
        }
        OutlierClass::Spread => {
            if u < 0.45 {
                (gaussian(rng, pos, sigma), 1.0)
            } else if u < 0.9 {
                (gaussian(rng, neg, sigma), -1.0)
            } else if u < 0.95 {
                (gaussian(rng, pos, 10.0 * sigma), 1.0)
            } else {
                (gaussian(rng, neg, 10.0 * sigma), -1.0)
            }
        }
    }
}

/// `n` points of `class` around the centroids of a fixed direction.
pub fn sample_points(class: OutlierClass, direction: &[f64], n: usize, sigma: f64, seed: u64) -> SvmDataset {
    let pos = centroid(direction, 1.0);
    let neg = centroid(direction, -1.0);
    let (features, labels) = (0..n)
        .map(|i| draw_point(class, &pos, &neg, sigma, &mut stream(seed, i as u64)))
        .unzip();
    SvmDataset { features, labels, intercept: true }
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedInstance, DataError> {
    spec.validate()?;
    let direction = draw_direction(spec.p, spec.seed)?;
    let dataset = sample_points(spec.outlier_class, &direction, spec.n, spec.sigma, spec.seed);
    let mut bayes_w = vec![0.0];
    bayes_w.extend_from_slice(&direction);
    Ok(GeneratedInstance { dataset, direction, bayes_w, provenance: spec.clone() })
}

/// Negates each label independently with probability `tau`.
pub fn flip_labels(ds: &SvmDataset, tau: f64, seed: u64) -> Result<SvmDataset, DataError> {
    if !(0.0..0.5).contains(&tau) {
        return Err(DataError::TauOutOfRange(tau));
    }
    let mut out = ds.clone();
    for (i, y) in out.labels.iter_mut().enumerate() {
        let u: f64 = stream(seed, i as u64).gen();
        if u < tau {
            *y = -*y;
        }
    }
    Ok(out)
}

/// Split sizes: floor of each share, leftover points go to train.
pub fn split_sizes(n: usize, fractions: (f64, f64, f64)) -> Result<(usize, usize, usize), DataError> {
    let (a, b, c) = fractions;
    if !(a > 0.0 && b > 0.0 && c > 0.0) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(DataError::BadFractions(format!("({a}, {b}, {c})")));
    }
    let nf = n as f64;
    let val = (nf * b + 1e-9).floor() as usize;
    let test = (nf * c + 1e-9).floor() as usize;
    let train = n - val - test;
    Ok((train, val, test))
}

/// Random disjoint partition into train, validation and test index sets.
pub fn split_indices(n: usize, fractions: (f64, f64, f64), seed: u64) -> Result<[Vec<usize>; 3], DataError> {
    let (train, val, _) = split_sizes(n, fractions)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(train + val);
    let val = idx.split_off(train);
    Ok([idx, val, test])
}

pub fn split(ds: &SvmDataset, fractions: (f64, f64, f64), seed: u64) -> Result<[SvmDataset; 3], DataError> {
    let [a, b, c] = split_indices(ds.n(), fractions, seed)?;
    Ok([ds.subset(&a), ds.subset(&b), ds.subset(&c)])
}

pub fn write_csv<W: std::io::Write>(ds: &SvmDataset, out: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| DataError::Io(e.to_string());
    let mut header = vec!["label".to_string()];
    header.extend((1..=ds.p()).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(io)?;
    for (f, y) in ds.features.iter().zip(&ds.labels) {
        let mut rec = vec![format!("{}", *y as i64)];
        rec.extend(f.iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(ds: &SvmDataset, path: &Path) -> Result<(), DataError> {
    write_csv(ds, fs::File::create(path)?)
}

/// Parses `label,f1,...,fp`; labels `0` map to `-1`.
pub fn read_csv<R: std::io::Read>(input: R) -> Result<SvmDataset, DataError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(|e| DataError::Parse { row: 1, col: 1, msg: e.to_string() })?.clone();
    if header.get(0) != Some("label") {
        return Err(DataError::Parse { row: 1, col: 1, msg: "first header must be `label`".into() });
    }
    for (j, h) in header.iter().enumerate().skip(1) {
        if h != format!("f{j}") {
            return Err(DataError::Parse { row: 1, col: j + 1, msg: format!("expected header f{j}, found {h:?}") });
        }
    }
    let width = header.len();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| DataError::Parse { row, col: 1, msg: e.to_string() })?;
        if rec.len() != width {
            return Err(DataError::Parse { row, col: rec.len().min(width) + 1, msg: format!("expected {width} fields, found {}", rec.len()) });
        }
        let y = match &rec[0] {
            "1" | "+1" | "1.0" => 1.0,
            "-1" | "-1.0" | "0" | "0.0" => -1.0,
            other => return Err(DataError::LabelDomain { row, value: other.to_string() }),
        };
        let f = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DataError::Parse { row, col: j + 1, msg: format!("not a finite number: {s:?}") })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        features.push(f);
        labels.push(y);
    }
    Ok(SvmDataset { features, labels, intercept: true })
}

pub fn load_csv(path: &Path) -> Result<SvmDataset, DataError> {
    read_csv(fs::File::open(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub seed: u64,
    pub spec: GenSpec,
    pub direction: Vec<f64>,
    pub bayes_w: Vec<f64>,
}

/// Writes `<stem>.csv` and `<stem>.json` under `dir`.
pub fn save_instance(inst: &GeneratedInstance, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), DataError> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    save_csv(&inst.dataset, &csv_path)?;
    let side = Sidecar {
        seed: inst.provenance.seed,
        spec: inst.provenance.clone(),
        direction: inst.direction.clone(),
        bayes_w: inst.bayes_w.clone(),
    };
    let text = serde_json::to_string_pretty(&side).map_err(|e| DataError::Io(e.to_string()))?;
    fs::write(&json_path, text + "\n")?;
    Ok((csv_path, json_path))
}

/// Misclassification rate of the Bayes rule for the `none` class,
/// `Φ(−0.5/σ)`.
pub fn bayes_rate(sigma: f64) -> f64 {
    0.5 * libm::erfc(0.5 / sigma / std::f64::consts::SQRT_2)
}
