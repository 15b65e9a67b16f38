#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rankone::conic::{export_cbf, export_mps};
use rankone::datagen::load_csv;
use rankone::hull::{hull_program, LinearObjective, RankOneSet};
use rankone::relaxations::{build_bigm_model, DEFAULT_BIG_M};
use rankone::svm::{build_conic_relaxation, build_hinge, SubsetCollection, SvmMode};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// `(file name, freshly exported text)` for every golden file.
pub fn golden_exports() -> Vec<(&'static str, String)> {
    let ds = load_csv(&golden_dir().join("tiny.csv")).unwrap();
    let bigm_k = build_bigm_model(&ds, DEFAULT_BIG_M, SvmMode::Cardinality(1.0)).unwrap();
    let bigm_l = build_bigm_model(&ds, DEFAULT_BIG_M, SvmMode::Penalty(2.0)).unwrap();
    let hinge = build_hinge(&ds, 0.5).unwrap();
    let (conic1, _) = build_conic_relaxation(&ds, &SubsetCollection::singletons(ds.n()), SvmMode::Cardinality(1.0)).unwrap();
    let set = RankOneSet::two_sided(vec![1.0, -2.0, 0.5]).unwrap();
    let obj = LinearObjective { alpha: vec![-1.0, 2.0, -0.5], beta: vec![0.25, -0.5, 0.1], gamma: 1.0 };
    let hull = hull_program(&set, &obj).unwrap();
    vec![
        ("tiny-bigm-k1.mps", export_mps(&bigm_k).unwrap()),
        ("tiny-bigm-lambda2.mps", export_mps(&bigm_l).unwrap()),
        ("tiny-hinge.cbf", export_cbf(&hinge).unwrap()),
        ("tiny-conic1-k1.cbf", export_cbf(&conic1).unwrap()),
        ("hull-two-sided.cbf", export_cbf(&hull).unwrap()),
    ]
}

/// Names of golden files whose content differs from a fresh export.
/// With `UPDATE_GOLDEN=1` the files are rewritten instead.
pub fn golden_mismatches() -> Vec<String> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut bad = Vec::new();
    for (name, text) in golden_exports() {
        let path = golden_dir().join(name);
        if update {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(stored) if stored == text => {}
            Ok(_) => bad.push(format!("{name}: content differs")),
            Err(e) => bad.push(format!("{name}: {e}")),
        }
    }
    bad
}
