//! Conic solver contract backed by the Clarabel interior-point method.
//!
//! Each block `r = a·v + c ∈ K` maps to Clarabel's `A x + s = b, s ∈ K` with
//! `A = −a`, `b = c`. Rotated cones are rotated into plain second-order
//! cones, and 2×2 PSD blocks are optionally lowered to rotated cones.

mod exact;

pub use exact::{exact_01_svm, solve_hard_margin, ExactSvmResult, HardMargin, SvmMode};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{self, Cone, ConicProgram, Solution, SolveStats, SolveStatus};
use crate::linalg::SQRT_2;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("solver returned {status:?} ({detail})")]
    Failed { status: SolveStatus, detail: String },
    #[error("enumeration too large: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iter: u32,
    pub time_limit: f64,
    pub verbose: bool,
    /// Replace 2×2 PSD blocks with rotated second-order cones.
    pub lower_small_psd: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iter: 200, time_limit: 60.0, verbose: false, lower_small_psd: true }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    fn check(&self) -> Result<(), SolverError> {
        if self.tolerance > 0.0 && self.tolerance.is_finite() {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig(format!("tolerance must be positive, got {}", self.tolerance)))
        }
    }
}

/// Linear map from original block rows to backend rows, per block.
enum RowMap {
    Identity,
    /// `(u, v, w…) ↦ ((u+v)/√2, (u−v)/√2, w…)`
    Rotate,
    /// `(a, √2·b, c) ↦ ((a+c)/√2, (a−c)/√2, √2·b)`
    Psd2,
}

impl RowMap {
    fn forward(&self, rows: &[f64]) -> Vec<f64> {
        match self {
            RowMap::Identity => rows.to_vec(),
            RowMap::Rotate => {
                let mut out = vec![(rows[0] + rows[1]) / SQRT_2, (rows[0] - rows[1]) / SQRT_2];
                out.extend_from_slice(&rows[2..]);
                out
            }
            RowMap::Psd2 => vec![(rows[0] + rows[2]) / SQRT_2, (rows[0] - rows[2]) / SQRT_2, rows[1]],
        }
    }

    /// Transpose of `forward`; every map here is orthogonal.
    fn backward(&self, rows: &[f64]) -> Vec<f64> {
        match self {
            RowMap::Identity => rows.to_vec(),
            RowMap::Rotate => {
                let mut out = vec![(rows[0] + rows[1]) / SQRT_2, (rows[0] - rows[1]) / SQRT_2];
                out.extend_from_slice(&rows[2..]);
                out
            }
            RowMap::Psd2 => vec![(rows[0] + rows[1]) / SQRT_2, rows[2], (rows[0] - rows[1]) / SQRT_2],
        }
    }
}

/// Sparse coefficient rows of a block: `(terms, constant)` per row.
type Rows = Vec<(Vec<(usize, f64)>, f64)>;

fn transform_rows(map: &RowMap, rows: &Rows) -> Rows {
    let k = rows.len();
    // Apply the map columnwise: build each output row as a combination.
    let basis: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut e = vec![0.0; k];
            e[i] = 1.0;
            map.forward(&e)
        })
        .collect();
    (0..k)
        .map(|o| {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            let mut constant = 0.0;
            for (i, (t, c)) in rows.iter().enumerate() {
                let w = basis[i][o];
                if w == 0.0 {
                    continue;
                }
                terms.extend(t.iter().map(|&(j, v)| (j, v * w)));
                constant += c * w;
            }
            (terms, constant)
        })
        .collect()
}

pub fn solve(p: &ConicProgram, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    solve_with(p, cfg, true)
}

fn solve_with(p: &ConicProgram, cfg: &SolverConfig, certify: bool) -> Result<Solution, SolverError> {
    cfg.check()?;
    if let Some(d) = conic::validate(p).first() {
        return Err(SolverError::InvalidProgram(d.to_string()));
    }
    let n = p.num_vars;
    if n == 0 {
        let feasible = p
            .constraints
            .iter()
            .all(|c| conic::cone_distance(c.cone, &c.rows.iter().map(|r| r.constant).collect::<Vec<_>>()) <= 0.0);
        return Ok(Solution {
            status: if feasible { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            primal: vec![],
            duals: p.constraints.iter().map(|c| vec![0.0; c.rows.len()]).collect(),
            objective: p.objective.constant,
            dual_objective: p.objective.constant,
            stats: SolveStats::default(),
            certificate: None,
        });
    }

    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    let mut maps: Vec<(RowMap, usize, usize)> = Vec::new();
    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    let mut b: Vec<f64> = Vec::new();

    let mut push_block = |cone: SupportedConeT<f64>, rows: Rows, b: &mut Vec<f64>| {
        for (terms, c) in rows {
            let r = b.len();
            for (j, v) in terms {
                ai.push(r);
                aj.push(j);
                av.push(-v);
            }
            b.push(c);
        }
        cones.push(cone);
    };

    for c in &p.constraints {
        let rows: Rows = c.rows.iter().map(|r| (r.terms.clone(), r.constant)).collect();
        let start = b.len();
        let (cone, map) = match c.cone {
            Cone::Zero(k) => (SupportedConeT::ZeroConeT(k), RowMap::Identity),
            Cone::Nonnegative(k) => (SupportedConeT::NonnegativeConeT(k), RowMap::Identity),
            Cone::SecondOrder(k) => (SupportedConeT::SecondOrderConeT(k), RowMap::Identity),
            Cone::RotatedSecondOrder(k) => (SupportedConeT::SecondOrderConeT(k), RowMap::Rotate),
            Cone::PsdTriangle(2) if cfg.lower_small_psd => (SupportedConeT::SecondOrderConeT(3), RowMap::Psd2),
            Cone::PsdTriangle(1) => (SupportedConeT::NonnegativeConeT(1), RowMap::Identity),
            Cone::PsdTriangle(m) => (SupportedConeT::PSDTriangleConeT(m), RowMap::Identity),
        };
        let rows = match map {
            RowMap::Identity => rows,
            _ => transform_rows(&map, &rows),
        };
        let len = rows.len();
        push_block(cone, rows, &mut b);
        maps.push((map, start, len));
    }
    // Variable bounds as trailing nonnegative rows.
    let mut bound_rows: Rows = Vec::new();
    for j in 0..n {
        if p.lower[j].is_finite() {
            bound_rows.push((vec![(j, 1.0)], -p.lower[j]));
        }
        if p.upper[j].is_finite() {
            bound_rows.push((vec![(j, -1.0)], p.upper[j]));
        }
    }
    if !bound_rows.is_empty() {
        let k = bound_rows.len();
        push_block(SupportedConeT::NonnegativeConeT(k), bound_rows, &mut b);
    }
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, ai, aj, av);

    let mut q = vec![0.0; n];
    for &(j, c) in &p.objective.linear {
        q[j] += c;
    }
    let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    for t in &p.objective.quadratic {
        pi.push(t.i);
        pj.push(t.j);
        pv.push(if t.i == t.j { 2.0 * t.coef } else { t.coef });
    }
    let pm = CscMatrix::new_from_triplets(n, n, pi, pj, pv);

    let run = |tol: f64| -> Result<_, SolverError> {
        let settings = DefaultSettingsBuilder::default()
            .verbose(cfg.verbose)
            .max_iter(cfg.max_iter)
            .time_limit(cfg.time_limit)
            .tol_gap_abs(tol)
            .tol_gap_rel(tol)
            .tol_feas(tol)
            .tol_infeas_abs(tol)
            .tol_infeas_rel(tol)
            .max_threads(1)
            .build()
            .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
        let mut solver = DefaultSolver::new(&pm, &q, &a, &b, &cones, settings)
            .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
        solver.solve();
        Ok(solver.solution)
    };
    let conclusive =
        |st: SolverStatus| matches!(st, SolverStatus::Solved | SolverStatus::PrimalInfeasible | SolverStatus::DualInfeasible);
    let mut tol = cfg.tolerance;
    let mut sol = run(tol)?;
    let mut iterations = sol.iterations;
    let mut backend_status = format!("{:?}", sol.status);
    // Reduced-accuracy or stalled exits: retry at looser tolerances.
    while !conclusive(sol.status) && tol * 10.0 <= RETRY_CEILING * (1.0 + 1e-9) {
        tol *= 10.0;
        let next = run(tol)?;
        iterations += next.iterations;
        backend_status = format!("{backend_status}; {:?} at tol {tol:e}", next.status);
        sol = next;
    }

    let mut status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::PrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible => SolveStatus::Unbounded,
        _ => SolveStatus::NumericalFailure,
    };
    let mut ray = None;
    if status == SolveStatus::NumericalFailure && certify {
        ray = certify_unbounded(p, cfg)?;
        if ray.is_some() {
            status = SolveStatus::Unbounded;
            backend_status += "; unbounded by separate ray and feasibility solves";
        }
    }
    let sol = &sol;
    let duals = maps
        .iter()
        .map(|(map, start, len)| map.backward(&sol.z[*start..*start + *len]))
        .collect();
    let certificate = match status {
        SolveStatus::Infeasible => Some(sol.z.clone()),
        SolveStatus::Unbounded => Some(ray.unwrap_or_else(|| sol.x.clone())),
        _ => None,
    };
    let objective = match status {
        SolveStatus::Infeasible => f64::INFINITY,
        SolveStatus::Unbounded => f64::NEG_INFINITY,
        _ => p.objective.eval(&sol.x),
    };
    let dual_objective = match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => objective,
        _ => sol.obj_val_dual + p.objective.constant,
    };
    Ok(Solution {
        status,
        primal: sol.x.clone(),
        duals,
        objective,
        dual_objective,
        stats: SolveStats {
            iterations,
            solve_time: sol.solve_time,
            backend_status,
        },
        certificate,
    })
}

/// After an inconclusive exit the tolerance is loosened tenfold at a time,
/// up to this value.
const RETRY_CEILING: f64 = 1e-6;

/// Decides unboundedness after an inconclusive solve from two better-posed
/// problems: find a direction `d` with homogeneous rows in their cones,
/// `P d = 0` and `qᵀd ≤ −1`, and check the original constraints are
/// feasible. Returns the verified direction.
fn certify_unbounded(p: &ConicProgram, cfg: &SolverConfig) -> Result<Option<Vec<f64>>, SolverError> {
    let n = p.num_vars;
    let mut rec = p.clone();
    for c in &mut rec.constraints {
        for r in &mut c.rows {
            r.constant = 0.0;
        }
    }
    rec.lower = p.lower.iter().map(|l| if l.is_finite() { 0.0 } else { f64::NEG_INFINITY }).collect();
    rec.upper = p.upper.iter().map(|u| if u.is_finite() { 0.0 } else { f64::INFINITY }).collect();
    rec.integer = vec![false; n];
    rec.objective = conic::Objective::default();
    let slope = conic::AffineExpr {
        terms: p.objective.linear.iter().map(|&(j, c)| (j, -c)).collect(),
        constant: -1.0,
    };
    rec.constraints.push(conic::ConeConstraint { cone: Cone::Nonnegative(1), rows: vec![slope] });
    let mut grad = vec![conic::AffineExpr::default(); n];
    for t in &p.objective.quadratic {
        if t.i == t.j {
            grad[t.i].terms.push((t.i, 2.0 * t.coef));
        } else {
            grad[t.i].terms.push((t.j, t.coef));
            grad[t.j].terms.push((t.i, t.coef));
        }
    }
    let grad: Vec<_> = grad.into_iter().filter(|g| !g.terms.is_empty()).collect();
    if !grad.is_empty() {
        rec.constraints.push(conic::ConeConstraint { cone: Cone::Zero(grad.len()), rows: grad });
    }
    let r = solve_with(&rec, cfg, false)?;
    if r.status != SolveStatus::Optimal || !is_improving_ray(p, &r.primal) {
        return Ok(None);
    }
    let mut feas = p.clone();
    feas.objective = conic::Objective::default();
    let f = solve_with(&feas, cfg, false)?;
    Ok((f.status == SolveStatus::Optimal).then_some(r.primal))
}

/// `true` when `x` points along a direction `d` that keeps every block's
/// homogeneous part inside its cone, lies in the kernel of the quadratic
/// term, and strictly decreases the linear objective.
fn is_improving_ray(p: &ConicProgram, x: &[f64]) -> bool {
    let norm = crate::linalg::norm2(x);
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    let d: Vec<f64> = x.iter().map(|v| v / norm).collect();
    let slope: f64 = p.objective.linear.iter().map(|&(j, c)| c * d[j]).sum();
    if slope > -RAY_TOL {
        return false;
    }
    let curvature: f64 = p.objective.quadratic.iter().map(|t| t.coef * d[t.i] * d[t.j]).sum();
    if curvature.abs() > RAY_TOL * RAY_TOL {
        return false;
    }
    let bounds_ok = (0..p.num_vars).all(|j| {
        (p.lower[j] == f64::NEG_INFINITY || d[j] >= -RAY_TOL) && (p.upper[j] == f64::INFINITY || d[j] <= RAY_TOL)
    });
    bounds_ok
        && p.constraints.iter().all(|c| {
            let rows: Vec<f64> = c.rows.iter().map(|r| r.terms.iter().map(|&(j, v)| v * d[j]).sum()).collect();
            conic::cone_distance(c.cone, &rows) <= RAY_TOL * slope.abs()
        })
}

const RAY_TOL: f64 = 1e-6;

/// Solves and insists on an optimal status.
pub fn solve_optimal(p: &ConicProgram, cfg: &SolverConfig) -> Result<Solution, SolverError> {
    let s = solve(p, cfg)?;
    if s.status == SolveStatus::Optimal {
        Ok(s)
    } else {
        Err(SolverError::Failed { status: s.status, detail: s.stats.backend_status.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{residuals, AffineExpr, ProgramBuilder};

    #[test]
    fn min_x_above_one() {
        let mut b = ProgramBuilder::new("lp");
        let x = b.add_var();
        b.add_nonneg(vec![AffineExpr::var(x).plus(-1.0)]).unwrap();
        b.add_objective(x, 1.0);
        let p = b.finish();
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-7);
        let r = residuals(&p, &s).unwrap();
        assert!(r.max_block() <= 1e-7);
    }

    #[test]
    fn rotated_cone_square() {
        // t ≥ w²: rows (t, 1/2, w).
        for (fix, expect) in [(None, 0.0), (Some(2.0), 4.0)] {
            let mut b = ProgramBuilder::new("rsoc");
            let t = b.add_var();
            let w = b.add_var();
            b.add_rotated(AffineExpr::var(t), AffineExpr::constant(0.5), vec![AffineExpr::var(w)]).unwrap();
            if let Some(v) = fix {
                b.add_zero(vec![AffineExpr::var(w).plus(-v)]).unwrap();
            }
            b.add_objective(t, 1.0);
            let s = solve(&b.finish(), &SolverConfig::default()).unwrap();
            assert_eq!(s.status, SolveStatus::Optimal);
            assert!((s.objective - expect).abs() < 1e-6, "{}", s.objective);
        }
    }

    #[test]
    fn psd_blocks_lowered_and_not() {
        // min a s.t. [[a, 1], [1, 1]] ⪰ 0 → a = 1.
        for lower in [true, false] {
            let mut b = ProgramBuilder::new("psd");
            let a = b.add_var();
            b.add_psd(&[
                vec![AffineExpr::var(a)],
                vec![AffineExpr::constant(1.0), AffineExpr::constant(1.0)],
            ])
            .unwrap();
            b.add_objective(a, 1.0);
            let cfg = SolverConfig { lower_small_psd: lower, ..Default::default() };
            let p = b.finish();
            let s = solve(&p, &cfg).unwrap();
            assert!((s.objective - 1.0).abs() < 1e-6);
            assert!(residuals(&p, &s).unwrap().max_block() < 1e-6);
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut b = ProgramBuilder::new("inf");
        let x = b.add_var();
        b.add_nonneg(vec![AffineExpr::var(x).plus(-1.0), AffineExpr::var(x).scaled(-1.0).plus(-1.0)])
            .unwrap();
        let s = solve(&b.finish(), &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.certificate.is_some());

        let mut b = ProgramBuilder::new("unb");
        let x = b.add_var();
        b.add_nonneg(vec![AffineExpr::var(x).scaled(-1.0)]).unwrap();
        b.add_objective(x, 1.0);
        let s = solve(&b.finish(), &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
        assert!(s.certificate.is_some());
    }

    #[test]
    fn bounds_and_quadratic() {
        // min (x − 3)² with x ≤ 1 → x = 1, value 4.
        let mut b = ProgramBuilder::new("qp");
        let x = b.add_var();
        b.set_bounds(x, f64::NEG_INFINITY, 1.0);
        b.add_quadratic(x, x, 1.0);
        b.add_objective(x, -6.0);
        b.add_objective_constant(9.0);
        let s = solve(&b.finish(), &SolverConfig::default()).unwrap();
        assert!((s.primal[0] - 1.0).abs() < 1e-6);
        assert!((s.objective - 4.0).abs() < 1e-6);
    }

    #[test]
    fn repeated_solves_agree() {
        let mut b = ProgramBuilder::new("det");
        let v = b.add_group("v", 3);
        b.add_constraint(
            Cone::SecondOrder(3),
            vec![AffineExpr::constant(1.0), AffineExpr::var(v[0]), AffineExpr::var(v[1])],
        )
        .unwrap();
        b.add_objective(v[0], 1.0);
        b.add_objective(v[1], 2.0);
        let p = b.finish();
        let a = solve(&p, &SolverConfig::default()).unwrap();
        let c = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(a.objective.to_bits(), c.objective.to_bits());
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = ProgramBuilder::new("e").finish();
        assert!(solve(&p, &SolverConfig::default().with_tolerance(0.0)).is_err());
    }

    #[test]
    fn stalled_unbounded_hull_is_certified() {
        use crate::hull::{hull_program, LinearObjective, RankOneSet};
        // The interior-point run stalls here at every tolerance; the ray
        // and feasibility solves settle it.
        let d = vec![-0.6804236492690641, 1.093023606089458];
        let eta = 2.070264907038217;
        let mut alpha: Vec<f64> = d.iter().map(|v| eta * v).collect();
        alpha[0] += 0.5;
        let set = RankOneSet::two_sided(d).unwrap();
        let obj = LinearObjective { alpha, beta: vec![-0.14960387407092757, 0.9656163246054157], gamma: 1.0 };
        let p = hull_program(&set, &obj).unwrap();
        let s = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded, "{}", s.stats.backend_status);
        let ray = s.certificate.unwrap();
        assert!(is_improving_ray(&p, &ray));
    }

    #[test]
    fn bounded_program_has_no_ray() {
        let mut b = ProgramBuilder::new("lp");
        let x = b.add_var();
        b.add_nonneg(vec![AffineExpr::var(x).plus(-1.0)]).unwrap();
        b.add_objective(x, 1.0);
        let p = b.finish();
        assert_eq!(certify_unbounded(&p, &SolverConfig::default()).unwrap(), None);
        assert!(!is_improving_ray(&p, &[-1.0]));
        let mut f = ProgramBuilder::new("free");
        let v = f.add_var();
        f.add_objective(v, 1.0);
        assert!(is_improving_ray(&f.finish(), &[-1.0]));
    }
}
