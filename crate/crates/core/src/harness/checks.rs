//! Seeded invariant suites. Each compares two independent computations
//! (closed form against enumeration, relaxation against oracle, grid
//! against SDP) and counts disagreements.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{gap, run_bound_experiment, DataSource, ExperimentConfig, Method};
use crate::conic::{export_cbf, import_cbf, SolveStatus};
use crate::datagen::{generate, substream_seed, GenSpec, OutlierClass};
use crate::hull::{
    eval_hull_rhs, eval_one_sided_rhs, exact_linear_opt, hull_program, phi_inner, phi_loss, LinearObjective,
    LinearOptResult, LossParams, RankOneSet, Sidedness,
};
use crate::relaxations::{
    build_bigm_model, copositive_matrices_for_subset, cp_sdp_equivalence_check, extension_violation,
    extension_witness, fixed_d_slack, grid_copositivity_check, ExtendedPoint, RelaxError, SubsetConstraintSpec,
    DEFAULT_BIG_M,
};
use crate::solver::{solve, SolverConfig};
use crate::svm::{build_conic_relaxation, build_hinge, subsets_up_to, SubsetCollection, SvmDataset, SvmMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed discrepancy, in the suite's own units.
    pub worst: f64,
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), trials: 0, failures: 0, worst: 0.0, notes: Vec::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }

    fn fail(&mut self, note: String) {
        self.failures += 1;
        if self.notes.len() < 10 {
            self.notes.push(note);
        }
    }
}

fn rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullCase {
    TwoSided,
    /// One-sided set with `d ≥ 0`.
    OneSidedNonneg,
    /// One-sided set with mixed-sign `d`.
    OneSidedMixed,
}

fn random_d(r: &mut ChaCha8Rng, n: usize, case: HullCase) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n)
            .map(|_| {
                let m = r.gen_range(0.2..2.0);
                if case == HullCase::OneSidedNonneg || r.gen_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect();
        let mixed = d.iter().any(|&v| v > 0.0) && d.iter().any(|&v| v < 0.0);
        if case != HullCase::OneSidedMixed || mixed {
            return d;
        }
    }
}

/// SOCP optimum of a linear objective over the hull against the
/// enumeration oracle. One trial in ten uses an `α` not parallel to `d`,
/// which must be unbounded on both sides.
pub fn hull_exactness(trials: usize, seed: u64, case: HullCase, cfg: &SolverConfig) -> SuiteReport {
    let mut rep = SuiteReport::new(match case {
        HullCase::TwoSided => "hull exactness (two-sided)",
        HullCase::OneSidedNonneg => "hull exactness (one-sided, d >= 0)",
        HullCase::OneSidedMixed => "hull exactness (one-sided, mixed d)",
    });
    for trial in 0..trials {
        rep.trials += 1;
        let mut r = rng(seed, trial as u64);
        let n = r.gen_range(2..=6);
        let d = random_d(&mut r, n, case);
        let eta: f64 = r.gen_range(-3.0..3.0);
        let beta: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let alpha: Vec<f64> = if trial % 10 == 9 {
            let mut a: Vec<f64> = d.iter().map(|v| eta * v).collect();
            a[0] += 0.5;
            a
        } else {
            d.iter().map(|v| eta * v).collect()
        };
        let side = if case == HullCase::TwoSided { Sidedness::TwoSided } else { Sidedness::OneSided };
        let set = RankOneSet::new(d.clone(), side).expect("nonzero d");
        let obj = LinearObjective { alpha, beta: beta.clone(), gamma: 1.0 };
        let oracle = match exact_linear_opt(&set, &obj) {
            Ok(o) => o,
            Err(e) => {
                rep.fail(format!("trial {trial}: oracle error {e}"));
                continue;
            }
        };
        let sol = match hull_program(&set, &obj).map_err(|e| e.to_string()).and_then(|p| solve(&p, cfg).map_err(|e| e.to_string())) {
            Ok(s) => s,
            Err(e) => {
                rep.fail(format!("trial {trial}: solve error {e}"));
                continue;
            }
        };
        match (&oracle, sol.status) {
            (LinearOptResult::Unbounded, SolveStatus::Unbounded) => {}
            (LinearOptResult::Optimal { value, .. }, SolveStatus::Optimal) => {
                let err = (sol.objective - value).abs() / (1.0 + value.abs());
                rep.worst = rep.worst.max(err);
                if err > 1e-6 {
                    rep.fail(format!("trial {trial}: socp {} vs oracle {value}", sol.objective));
                }
                if case == HullCase::OneSidedMixed {
                    let free = -eta * eta / 4.0 + beta.iter().map(|b| b.min(0.0)).sum::<f64>();
                    if (free - value).abs() > 1e-9 * (1.0 + free.abs()) {
                        rep.fail(format!("trial {trial}: z-free optimum {free} vs oracle {value}"));
                    }
                }
            }
            (o, s) => rep.fail(format!("trial {trial}: d={d:?}: oracle {o:?} but solver {s:?} ({})", sol.stats.backend_status)),
        }
    }
    rep
}

/// Closed-form φ against a `z`-grid minimisation of the inner problem, plus
/// the exact boundary value `φ(√(λ/d)) = λ`.
pub fn phi_grid(trials: usize, seed: u64, z_step: f64) -> SuiteReport {
    let mut rep = SuiteReport::new("phi closed form vs z-grid");
    let steps = (1.0 / z_step).round() as usize;
    for trial in 0..trials {
        rep.trials += 1;
        let mut r = rng(seed, trial as u64);
        let x: f64 = r.gen_range(-1.0..3.0);
        let params = LossParams::new(r.gen_range(0.1..4.0), r.gen_range(0.1..2.0)).expect("positive");
        let grid = (0..=steps).map(|k| phi_inner(x, k as f64 / steps as f64, &params)).fold(f64::INFINITY, f64::min);
        let closed = phi_loss(x, &params).expect("valid params");
        let err = (grid - closed).abs();
        rep.worst = rep.worst.max(err);
        if err > 1e-4 {
            rep.fail(format!("trial {trial}: x={x} {params:?}: grid {grid} vs closed {closed}"));
        }
        let edge = (params.lambda / params.d).sqrt();
        if phi_loss(edge, &params).expect("valid params") != params.lambda {
            rep.fail(format!("trial {trial}: boundary value differs from lambda"));
        }
    }
    rep
}

fn all_subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    subsets_up_to(n, k.min(n), usize::MAX).map(|c| c.subsets).unwrap_or_default()
}

fn integer_point(r: &mut ChaCha8Rng, n: usize, side: Sidedness) -> ExtendedPoint {
    let z: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.gen_bool(0.5)))).collect();
    let x = z
        .iter()
        .map(|&zi| {
            if r.gen_bool(0.2) {
                0.0
            } else if zi == 1.0 {
                match side {
                    Sidedness::TwoSided => r.gen_range(0.0..2.0),
                    Sidedness::OneSided => r.gen_range(-2.0..2.0),
                }
            } else {
                -r.gen_range(0.0..2.0)
            }
        })
        .collect();
    ExtendedPoint::lifted(x, z)
}

/// Valid inequalities at random integer-feasible points: the two-sided and
/// one-sided hull inequalities, the subset copositive matrices, their PSD
/// extensions with the constructive witnesses, and the fixed-`d` lifted
/// inequality.
pub fn validity(points: usize, seed: u64, grid_resolution: usize, tol: f64) -> SuiteReport {
    let mut rep = SuiteReport::new("validity at integer points");
    for trial in 0..points {
        rep.trials += 1;
        let mut r = rng(seed, trial as u64);
        let n = r.gen_range(1..=5);
        let d = random_d(&mut r, n, HullCase::TwoSided);
        let mut bad = Vec::new();
        for side in [Sidedness::TwoSided, Sidedness::OneSided] {
            let pt = integer_point(&mut r, n, side);
            let t: f64 = d.iter().zip(&pt.x).map(|(a, b)| a * b).sum::<f64>().powi(2);
            let set = RankOneSet::new(d.clone(), side).expect("nonzero d");
            let rhs = match side {
                Sidedness::TwoSided => eval_hull_rhs(&set, &pt.x, &pt.z),
                Sidedness::OneSided => eval_one_sided_rhs(&set, &pt.x, &pt.z),
            }
            .expect("valid point");
            let v = rhs - t;
            rep.worst = rep.worst.max(v);
            if v > tol * (1.0 + t) {
                bad.push(format!("{side:?} hull: rhs {rhs} > t {t}"));
            }
            for s in all_subsets_up_to(n, 3) {
                let spec = SubsetConstraintSpec::new(s.clone(), side, n).expect("valid subset");
                for m in copositive_matrices_for_subset(&pt, &spec).expect("dimensions") {
                    match grid_copositivity_check(&m, grid_resolution, tol) {
                        Ok(v) if v.is_copositive() => {}
                        Ok(v) => bad.push(format!("{side:?} S={s:?}: {v:?}")),
                        Err(e) => bad.push(format!("{side:?} S={s:?}: {e}")),
                    }
                }
                let (g, h) = extension_witness(&pt, &spec);
                let ev = extension_violation(&pt, &spec, &g, &h);
                rep.worst = rep.worst.max(ev);
                if ev > tol {
                    bad.push(format!("{side:?} S={s:?}: extension violated by {ev}"));
                }
            }
            if side == Sidedness::TwoSided {
                let dn: Vec<f64> = d.iter().map(|v| v.abs()).collect();
                let slack = fixed_d_slack(&dn, &pt).expect("nonnegative d");
                if slack < -tol {
                    bad.push(format!("fixed-d slack {slack}"));
                }
            }
        }
        if !bad.is_empty() {
            rep.fail(format!("point {trial}: {}", bad.join("; ")));
        }
    }
    rep
}

/// Outcome of the copositivity / SDP comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSummary {
    pub report: SuiteReport,
    pub agreements: usize,
    pub near_boundary: usize,
}

impl EquivalenceSummary {
    pub fn agreement_rate(&self) -> f64 {
        self.agreements as f64 / self.report.trials.max(1) as f64
    }
}

/// Grid copositivity of `[[t, xᵀ], [x, X]]` against `∃ y ≤ x` with
/// `[[t, yᵀ], [y, X]] ⪰ 0` on random inputs of order 2 and 3. Failures
/// count disagreements farther than one grid cell from the boundary and
/// solver errors.
pub fn cp_sdp_agreement(inputs: usize, seed: u64, resolution: usize, cfg: &SolverConfig) -> EquivalenceSummary {
    let mut rep = SuiteReport::new("copositive vs SDP extension");
    let mut agreements = 0;
    let mut near = 0;
    for trial in 0..inputs {
        rep.trials += 1;
        let mut r = rng(seed, trial as u64);
        let k = r.gen_range(1..=2);
        let t: f64 = r.gen_range(0.0..1.0);
        let x: Vec<f64> = (0..k).map(|_| r.gen_range(-1.0..1.0)).collect();
        let b = DMatrix::from_fn(k, k, |_, _| r.gen_range(-1.0..1.0));
        let big_x = &b * b.transpose();
        match cp_sdp_equivalence_check(t, &x, &big_x, resolution, cfg) {
            Ok(e) if e.agree => agreements += 1,
            Ok(e) => {
                near += 1;
                rep.worst = rep.worst.max(e.grid_min.abs());
            }
            Err(RelaxError::Disagreement { grid_min, cell }) => {
                rep.fail(format!("input {trial}: grid min {grid_min} beyond cell {cell}"))
            }
            Err(e) => rep.fail(format!("input {trial}: {e}")),
        }
    }
    EquivalenceSummary { report: rep, agreements, near_boundary: near }
}

/// `decomposition ≤ conic1 ≤ exact` and `conic2 ≤ exact` on small seeded
/// cardinality instances, with every gap in `[0, 1)`. Draws whose exact
/// problem is infeasible (no `k` removals separate the data) make the chain
/// vacuous; they are skipped and replaced, up to ten draws per instance.
/// Solves run at `min(tol, 1e−10)`: near-degenerate margins put optima in
/// the hundreds, where a `1e−8` stop can sit `1e−6` away in relative terms.
pub fn bound_chain(instances: usize, seed: u64, cfg: &SolverConfig, threads: usize) -> SuiteReport {
    let cfg = &cfg.with_tolerance(cfg.tolerance.min(1e-10));
    let mut rep = SuiteReport::new("bound dominance chain");
    let classes = [OutlierClass::None, OutlierClass::Clustered, OutlierClass::Spread];
    let mut skipped = 0;
    for i in 0..10 * instances {
        if rep.trials == instances {
            break;
        }
        let mut r = rng(seed, i as u64);
        let n = r.gen_range(8..=14);
        let p = r.gen_range(1..=3);
        let k = r.gen_range(1..=3) as f64;
        let class = classes[r.gen_range(0..3)];
        let exp = ExperimentConfig {
            methods: vec![Method::Decomposition, Method::Conic1, Method::Conic2, Method::Exact],
            replications: 1,
            seed: substream_seed(seed, i as u64),
            k,
            source: DataSource::Generate(GenSpec { outlier_class: class, n, p, sigma: r.gen_range(0.2..1.0), seed: 0 }),
            solver: *cfg,
            threads,
            ..ExperimentConfig::default()
        };
        let rows = match run_bound_experiment(&exp) {
            Ok(rows) => rows,
            Err(e) => {
                rep.trials += 1;
                rep.fail(format!("instance {i}: {e}"));
                continue;
            }
        };
        if rows[3].status == "Infeasible" {
            skipped += 1;
            continue;
        }
        rep.trials += 1;
        let b: Vec<Option<f64>> = rows.iter().map(|row| row.bound).collect();
        let (Some(dec), Some(c1), Some(c2), Some(ex)) = (b[0], b[1], b[2], b[3]) else {
            let st: Vec<&str> = rows.iter().map(|row| row.status.as_str()).collect();
            rep.fail(format!("instance {i}: missing bound, statuses {st:?}"));
            continue;
        };
        let slack = |v: f64| 1e-6 * (1.0 + v.abs());
        let mut bad = Vec::new();
        if dec > c1 + slack(c1) {
            bad.push(format!("decomposition {dec} > conic1 {c1}"));
        }
        if c1 > ex + slack(ex) {
            bad.push(format!("conic1 {c1} > exact {ex}"));
        }
        if c2 > ex + slack(ex) {
            bad.push(format!("conic2 {c2} > exact {ex}"));
        }
        for (name, v) in [("decomposition", dec), ("conic1", c1), ("conic2", c2)] {
            match gap(ex, v) {
                Ok(g) if g.value >= -1e-6 && g.value < 1.0 => rep.worst = rep.worst.max(g.value),
                Ok(g) => bad.push(format!("{name} gap {}", g.value)),
                Err(e) => bad.push(format!("{name}: {e}")),
            }
        }
        if !bad.is_empty() {
            rep.fail(format!("instance {i} (n={n}, p={p}, k={k}): {}", bad.join("; ")));
        }
    }
    if rep.trials < instances {
        rep.failures += 1;
        rep.notes.push(format!("only {} feasible instances drawn", rep.trials));
    }
    if skipped > 0 {
        rep.notes.push(format!("{skipped} draws with infeasible exact problem replaced"));
    }
    rep
}

/// The big-M continuous relaxation is nearly vacuous (`≤ λn/M`), and it
/// coincides with the hinge model at `λ̄ = λ/M`.
pub fn bigm_triviality(instances: usize, seed: u64, cfg: &SolverConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("big-M relaxation");
    for i in 0..instances {
        rep.trials += 1;
        let mut r = rng(seed, i as u64);
        let spec = GenSpec {
            outlier_class: OutlierClass::Clustered,
            n: r.gen_range(10..=30),
            p: r.gen_range(1..=3),
            sigma: r.gen_range(0.2..1.0),
            seed: substream_seed(seed, i as u64),
        };
        let ds = generate(&spec).expect("valid spec").dataset;
        let lambda = r.gen_range(0.5..5.0);
        let relax = build_bigm_model(&ds, DEFAULT_BIG_M, SvmMode::Penalty(lambda))
            .map_err(|e| e.to_string())
            .and_then(|p| solve(&p, cfg).map_err(|e| e.to_string()));
        let hinge = build_hinge(&ds, lambda / DEFAULT_BIG_M)
            .map_err(|e| e.to_string())
            .and_then(|p| solve(&p, cfg).map_err(|e| e.to_string()));
        match (relax, hinge) {
            (Ok(a), Ok(b)) if a.status == SolveStatus::Optimal && b.status == SolveStatus::Optimal => {
                let cap = lambda * ds.n() as f64 / DEFAULT_BIG_M;
                if a.objective > cap + 1e-8 {
                    rep.fail(format!("instance {i}: relaxation {} above {cap}", a.objective));
                }
                let diff = (a.objective - b.objective).abs();
                rep.worst = rep.worst.max(diff);
                if diff > 1e-5 {
                    rep.fail(format!("instance {i}: relaxation {} vs hinge {}", a.objective, b.objective));
                }
            }
            (a, b) => rep.fail(format!(
                "instance {i}: statuses {:?} / {:?}",
                a.map(|s| s.status),
                b.map(|s| s.status)
            )),
        }
    }
    rep
}

fn random_dataset(r: &mut ChaCha8Rng) -> SvmDataset {
    let n = r.gen_range(3..=6);
    let p = r.gen_range(1..=2);
    let features = (0..n).map(|_| (0..p).map(|_| r.gen_range(-2.0..2.0)).collect()).collect();
    let labels = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    SvmDataset::new(features, labels, true).expect("well formed")
}

/// CBF export then import of random conic programs: structural identity,
/// byte-stable re-export, and equal optimal values.
pub fn cbf_round_trip(programs: usize, seed: u64, cfg: &SolverConfig) -> SuiteReport {
    let mut rep = SuiteReport::new("CBF round trip");
    for i in 0..programs {
        rep.trials += 1;
        let mut r = rng(seed, i as u64);
        let ds = random_dataset(&mut r);
        let mode = if r.gen_bool(0.5) { SvmMode::Penalty(r.gen_range(0.1..3.0)) } else { SvmMode::Cardinality(1.0) };
        let (prog, _) = build_conic_relaxation(&ds, &SubsetCollection::singletons(ds.n()), mode).expect("valid data");
        let text = match export_cbf(&prog) {
            Ok(t) => t,
            Err(e) => {
                rep.fail(format!("program {i}: export {e}"));
                continue;
            }
        };
        let back = match import_cbf(&text) {
            Ok(b) => b,
            Err(e) => {
                rep.fail(format!("program {i}: import {e}"));
                continue;
            }
        };
        if !prog.structurally_equal(&back, 1e-12) {
            rep.fail(format!("program {i}: structure changed"));
        }
        if export_cbf(&back).ok().as_deref() != Some(text.as_str()) {
            rep.fail(format!("program {i}: re-export differs"));
        }
        match (solve(&prog, cfg), solve(&back, cfg)) {
            (Ok(a), Ok(b)) if a.status == SolveStatus::Optimal && b.status == SolveStatus::Optimal => {
                let err = (a.objective - b.objective).abs() / (1.0 + a.objective.abs());
                rep.worst = rep.worst.max(err);
                if err > 1e-6 {
                    rep.fail(format!("program {i}: objective {} vs {}", a.objective, b.objective));
                }
            }
            (a, b) => rep.fail(format!("program {i}: {:?} / {:?}", a.map(|s| s.status), b.map(|s| s.status))),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let cfg = SolverConfig::default();
        for rep in [
            hull_exactness(20, 1, HullCase::TwoSided, &cfg),
            hull_exactness(20, 2, HullCase::OneSidedNonneg, &cfg),
            hull_exactness(20, 3, HullCase::OneSidedMixed, &cfg),
            phi_grid(10, 4, 1e-4),
            validity(30, 5, 20, 1e-8),
            bigm_triviality(3, 6, &cfg),
            cbf_round_trip(3, 7, &cfg),
        ] {
            assert!(rep.passed(), "{rep:?}");
        }
        let eq = cp_sdp_agreement(30, 8, 50, &cfg);
        assert!(eq.report.passed(), "{eq:?}");
    }
}
