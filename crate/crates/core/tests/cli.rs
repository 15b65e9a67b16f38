mod common;

use std::path::Path;
use std::process::{Command, Output};

use rankone::conic::export_mps;
use rankone::datagen::load_csv;
use rankone::relaxations::{build_bigm_model, DEFAULT_BIG_M};
use rankone::svm::{Estimator, SvmMode};

fn rankone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankone")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn hull_rhs_example() {
    let o = rankone(&["hull", "rhs", "--d", "1,1", "--x", "0.5,-0.2", "--z", "0.3,0.1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "0.225");
}

#[test]
fn hull_check_and_export_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("hull.json");
    std::fs::write(&input, r#"{"d": [1, 1], "x": [0.5, -0.2], "z": [0.3, 0.1], "t": 0.2}"#).unwrap();
    let o = rankone(&["hull", "check", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["member"], false);

    let o = rankone(&["hull", "socp-export", "--input", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().find(|l| !l.starts_with('#')).is_some_and(|l| l.starts_with("VER")), "{text}");
    rankone::conic::import_cbf(&text).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(rankone(&["--bogus"]).status.code(), Some(1));
    assert_eq!(rankone(&["hull", "rhs"]).status.code(), Some(1));
    assert_eq!(rankone(&["datagen", "--n", "0", "--p", "2", "--sigma", "1"]).status.code(), Some(1));
    let o = rankone(&["train", "--data", "x.csv", "--method", "nope", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(rankone(&["--help"]).status.code(), Some(0));
    assert_eq!(rankone(&["--version"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_two() {
    assert_eq!(rankone(&["hull", "rhs", "--d", "1", "--x", "1", "--z", "2"]).status.code(), Some(2));
    let o = rankone(&["train", "--data", "/nonexistent.csv", "--method", "hinge", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let tiny = common::golden_dir().join("tiny.csv");
    // The hinge model has a cone, which MPS cannot carry.
    let o = rankone(&["export", "--format", "mps", "--data", tiny.to_str().unwrap(), "--model", "hinge", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn datagen_then_train() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst");
    let o = rankone(&[
        "datagen", "--class", "clustered", "--n", "100", "--p", "2", "--sigma", "0.5", "--seed", "1", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = out.join("instance.csv");
    assert!(csv.exists() && out.join("instance.json").exists());
    assert_eq!(load_csv(&csv).unwrap().n(), 100);

    let est_path = dir.path().join("est.json");
    let o = rankone(&[
        "train", "--data", csv.to_str().unwrap(), "--method", "hinge", "--lambda", "1", "--out",
        est_path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let est: Estimator = serde_json::from_str(&std::fs::read_to_string(&est_path).unwrap()).unwrap();
    assert_eq!(est.method, "hinge");
    assert_eq!(est.w.len(), 3);
    assert_eq!(est.hyperparameters["lambda"], 1.0);
}

#[test]
fn export_matches_library() {
    let tiny = common::golden_dir().join("tiny.csv");
    let o = rankone(&["export", "--format", "mps", "--data", tiny.to_str().unwrap(), "--model", "bigm", "--k", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let ds = load_csv(&tiny).unwrap();
    let expected = export_mps(&build_bigm_model(&ds, DEFAULT_BIG_M, SvmMode::Cardinality(1.0)).unwrap()).unwrap();
    assert_eq!(stdout(&o), expected);
    let o = rankone(&["export", "--format", "cbf", "--data", tiny.to_str().unwrap(), "--model", "conic1", "--k", "1"]);
    assert_eq!(
        stdout(&o),
        std::fs::read_to_string(common::golden_dir().join("tiny-conic1-k1.cbf")).unwrap()
    );
}

fn run_to(dir: &Path, args: &[&str]) -> String {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", dir.to_str().unwrap()]);
    let o = rankone(&full);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["results.csv", "timings.csv", "table.md"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    std::fs::read_to_string(dir.join("results.csv")).unwrap()
}

#[test]
fn bound_and_cv_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let bound = [
        "bound", "--methods", "conic1,exact,bigm-export", "--class", "spread", "--n", "10", "--p", "2", "--sigma", "0.5",
        "--k", "1", "--replications", "2", "--seed", "5", "--no-timestamp",
    ];
    let a = run_to(&tmp.path().join("a"), &[&bound[..], &["--threads", "1"]].concat());
    let b = run_to(&tmp.path().join("b"), &[&bound[..], &["--threads", "4"]].concat());
    assert!(tmp.path().join("a/bigm-0.mps").exists());
    // The note column carries the output path, which differs by directory.
    let strip = |s: &str| s.replace(tmp.path().join("a").to_str().unwrap(), "").replace(tmp.path().join("b").to_str().unwrap(), "");
    assert_eq!(strip(&a), strip(&b));
    assert!(!a.starts_with('#'));

    let cv = [
        "cv", "--methods", "hinge,conic1", "--class", "clustered", "--n", "30", "--p", "2", "--sigma", "0.3",
        "--grid-size", "5", "--replications", "2", "--test-size", "500", "--seed", "9",
    ];
    let c = run_to(&tmp.path().join("c"), &[&cv[..], &["--no-timestamp", "--threads", "1"]].concat());
    let d = run_to(&tmp.path().join("d"), &[&cv[..], &["--no-timestamp", "--threads", "3"]].concat());
    assert_eq!(c, d);
    let stamped = run_to(&tmp.path().join("e"), &cv);
    assert!(stamped.starts_with("# generated"));
    assert_eq!(stamped.lines().skip(1).collect::<Vec<_>>(), c.lines().collect::<Vec<_>>());
}

#[test]
fn cv_reads_json_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"methods": ["hinge+conic1"], "grid_size": 4, "replications": 1, "test_size": 200,
            "source": {"generate": {"outlier_class": "none", "n": 20, "p": 2, "sigma": 0.3, "seed": 0}}}"#,
    )
    .unwrap();
    let out = run_to(&tmp.path().join("o"), &["cv", "--config", cfg.to_str().unwrap(), "--no-timestamp"]);
    assert!(out.lines().any(|l| l.contains(",hinge+conic1,")), "{out}");
    let o = rankone(&["cv", "--config", "/nonexistent.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_passes_at_small_size() {
    let o = rankone(&["selftest", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().all(|l| l.starts_with("PASS") || l.starts_with("    ")));
}
