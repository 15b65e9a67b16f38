//! Result files. Timings live in their own file so result CSVs stay
//! byte-identical across runs.

use std::fmt::Write;

use super::{fmt_f, BenchRow, CvReport};

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn to_csv(header: &[&str], records: Vec<Vec<String>>, stamp: Option<&str>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    match stamp {
        Some(s) => format!("# generated {s}\n{body}"),
        None => body,
    }
}

/// Columns: instance, seed, method, k, bound, reference, gap,
/// gap_anomaly, status, train_rate, note.
pub fn bench_csv(rows: &[BenchRow], stamp: Option<&str>) -> String {
    let header = ["instance", "seed", "method", "k", "bound", "reference", "gap", "gap_anomaly", "status", "train_rate", "note"];
    let records = rows
        .iter()
        .map(|r| {
            vec![
                r.instance.to_string(),
                r.seed.to_string(),
                r.method.to_string(),
                fmt_f(r.hyperparameter),
                opt(r.bound),
                opt(r.reference),
                opt(r.gap),
                r.gap_anomaly.to_string(),
                r.status.clone(),
                opt(r.train_rate),
                r.note.clone(),
            ]
        })
        .collect();
    to_csv(&header, records, stamp)
}

/// Columns: replication, seed, method, chosen_index, hyper_kind,
/// hyperparameter, val_errors, train_rate, val_rate, test_rate, norm,
/// failures.
pub fn cv_csv(rep: &CvReport, stamp: Option<&str>) -> String {
    let header = [
        "replication",
        "seed",
        "method",
        "chosen_index",
        "hyper_kind",
        "hyperparameter",
        "val_errors",
        "train_rate",
        "val_rate",
        "test_rate",
        "norm",
        "failures",
    ];
    let records = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.replication.to_string(),
                r.seed.to_string(),
                r.method.clone(),
                r.chosen_index.map(|i| i.to_string()).unwrap_or_default(),
                r.hyper_kind.clone(),
                opt(r.hyperparameter),
                r.val_errors.map(|v| v.to_string()).unwrap_or_default(),
                opt(r.train_rate),
                opt(r.val_rate),
                opt(r.test_rate),
                opt(r.norm),
                r.failures.to_string(),
            ]
        })
        .collect();
    to_csv(&header, records, stamp)
}

/// `(id, method, seconds)` triples.
pub fn timings_csv(entries: &[(String, String, f64)]) -> String {
    let records = entries.iter().map(|(i, m, s)| vec![i.clone(), m.clone(), format!("{s:.6}")]).collect();
    to_csv(&["id", "method", "seconds"], records, None)
}

fn pct(v: f64) -> String {
    format!("{:.1}%", 100.0 * v)
}

pub fn bench_markdown(rows: &[BenchRow]) -> String {
    let mut methods = Vec::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method);
        }
    }
    let mut out = String::from("| method | rows | mean bound | mean gap | max gap | anomalies | mean time (s) |\n|---|---|---|---|---|---|---|\n");
    for m in methods {
        let sel: Vec<&BenchRow> = rows.iter().filter(|r| r.method == m).collect();
        let bounds: Vec<f64> = sel.iter().filter_map(|r| r.bound).collect();
        let gaps: Vec<f64> = sel.iter().filter_map(|r| r.gap).collect();
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        let maxg = gaps.iter().copied().fold(f64::NAN, f64::max);
        let _ = writeln!(
            out,
            "| {m} | {} | {:.4} | {} | {} | {} | {:.3} |",
            sel.len(),
            mean(&bounds),
            if gaps.is_empty() { "-".into() } else { pct(mean(&gaps)) },
            if gaps.is_empty() { "-".into() } else { pct(maxg) },
            sel.iter().filter(|r| r.gap_anomaly).count(),
            sel.iter().map(|r| r.seconds).sum::<f64>() / sel.len() as f64,
        );
    }
    out
}

pub fn cv_markdown(rep: &CvReport) -> String {
    let mut out = String::from("| method | replications | test error | sd | mean time (s) |\n|---|---|---|---|---|\n");
    for s in &rep.summary {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.3} |",
            s.method,
            s.replications,
            pct(s.mean_test_rate),
            pct(s.sd_test_rate),
            s.mean_seconds
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Method;

    #[test]
    fn bench_csv_layout() {
        let row = BenchRow {
            instance: 0,
            seed: 9,
            method: Method::Conic1,
            hyperparameter: 2.0,
            bound: Some(0.5),
            reference: Some(1.0),
            gap: Some(0.5),
            gap_anomaly: false,
            status: "Optimal".into(),
            train_rate: None,
            seconds: 1.25,
            note: String::new(),
        };
        let text = bench_csv(std::slice::from_ref(&row), None);
        assert_eq!(
            text,
            "instance,seed,method,k,bound,reference,gap,gap_anomaly,status,train_rate,note\n\
             0,9,conic1,2.0000000000e0,5.0000000000e-1,1.0000000000e0,5.0000000000e-1,false,Optimal,,\n"
        );
        assert!(bench_csv(std::slice::from_ref(&row), Some("1")).starts_with("# generated 1\n"));
        assert!(bench_markdown(&[row]).contains("| conic1 | 1 |"));
    }
}
