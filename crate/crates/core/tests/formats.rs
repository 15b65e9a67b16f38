mod common;

use rankone::conic::{export_cbf, export_mps, import_cbf, import_mps};
use rankone::datagen::load_csv;
use rankone::relaxations::{build_bigm_model, DEFAULT_BIG_M};
use rankone::solver::{solve, SolverConfig};
use rankone::svm::SvmMode;

#[test]
fn golden_files_are_byte_stable() {
    let bad = common::golden_mismatches();
    assert!(bad.is_empty(), "{bad:?} (rerun with UPDATE_GOLDEN=1 after an intended format change)");
}

#[test]
fn golden_files_reimport() {
    for (name, text) in common::golden_exports() {
        if name.ends_with(".mps") {
            // MPS carries no variable groups, so names become generic after one pass.
            let once = export_mps(&import_mps(&text).unwrap()).unwrap();
            let twice = export_mps(&import_mps(&once).unwrap()).unwrap();
            assert_eq!(once, twice, "{name}");
            assert_eq!(once.lines().count(), text.lines().count(), "{name}");
        } else {
            let p = import_cbf(&text).unwrap();
            assert_eq!(export_cbf(&p).unwrap(), text, "{name}");
        }
    }
}

#[test]
fn bigm_mps_keeps_integrality_and_bounds() {
    let text = std::fs::read_to_string(common::golden_dir().join("tiny-bigm-k1.mps")).unwrap();
    assert!(text.contains("MARKER"), "integer markers missing");
    assert!(text.contains("BOUNDS"));
    assert!(text.contains("QUADOBJ") || text.contains("QMATRIX"));
    let p = import_mps(&text).unwrap();
    assert!(p.has_integers());
}

#[test]
fn bigm_relaxation_of_tiny_dataset_is_nearly_zero() {
    let ds = load_csv(&common::golden_dir().join("tiny.csv")).unwrap();
    let lambda = 2.0;
    let p = build_bigm_model(&ds, DEFAULT_BIG_M, SvmMode::Penalty(lambda)).unwrap();
    let s = solve(&p, &SolverConfig::default()).unwrap();
    assert!(s.objective <= lambda * ds.n() as f64 / DEFAULT_BIG_M + 1e-8, "{}", s.objective);
}
