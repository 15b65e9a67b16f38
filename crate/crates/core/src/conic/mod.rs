//! Solver-agnostic conic program IR.
//!
//! A program minimises `cᵀv + vᵀQv + c₀` over `v ∈ ℝᴺ` subject to an
//! ordered list of blocks `A·v + b ∈ K`. Every block row is an
//! [`AffineExpr`]. Cone conventions:
//!
//! * `SecondOrder(k)`: `r₀ ≥ ‖(r₁, …, r_{k−1})‖`.
//! * `RotatedSecondOrder(k)`: `2 r₀ r₁ ≥ ‖(r₂, …, r_{k−1})‖²`, `r₀, r₁ ≥ 0`.
//! * `PsdTriangle(m)`: the `m(m+1)/2` rows hold the lower triangle of a
//!   symmetric matrix, row-major, off-diagonal entries scaled by √2.
//!
//! Variable bounds and integrality flags exist for the MIQP export path;
//! conic builders express everything through blocks.

mod cbf;
mod mps;

pub use cbf::{export_cbf, import_cbf, section_counts};
pub use mps::{export_mps, import_mps};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, smat, triangle_len};

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("variable {index} is not registered (program has {num_vars} variables)")]
    UnregisteredVariable { index: usize, num_vars: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("program is not MIQP-shaped: {0}")]
    NotMiqpShaped(String),
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("solution status is {0:?}, expected Optimal")]
    StatusNotOptimal(SolveStatus),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Handle to a registered scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cone {
    Zero(usize),
    Nonnegative(usize),
    SecondOrder(usize),
    RotatedSecondOrder(usize),
    PsdTriangle(usize),
}

impl Cone {
    /// Number of affine rows the block must carry.
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(k)
            | Cone::Nonnegative(k)
            | Cone::SecondOrder(k)
            | Cone::RotatedSecondOrder(k) => k,
            Cone::PsdTriangle(order) => triangle_len(order),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Cone::Zero(_) | Cone::Nonnegative(_))
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cone::Zero(k) => write!(f, "zero({k})"),
            Cone::Nonnegative(k) => write!(f, "nonneg({k})"),
            Cone::SecondOrder(k) => write!(f, "soc({k})"),
            Cone::RotatedSecondOrder(k) => write!(f, "rsoc({k})"),
            Cone::PsdTriangle(k) => write!(f, "psd({k})"),
        }
    }
}

/// Sparse affine expression `Σ coef·v_j + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self { terms: vec![(v.0, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, v: Var, coef: f64) -> Self {
        self.terms.push((v.0, coef));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_term(&mut self, v: Var, coef: f64) {
        self.terms.push((v.0, coef));
    }

    pub fn add_expr(&mut self, other: &AffineExpr, scale: f64) {
        self.terms.extend(other.terms.iter().map(|&(j, c)| (j, c * scale)));
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, s: f64) -> AffineExpr {
        AffineExpr {
            terms: self.terms.iter().map(|&(j, c)| (j, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, c)| c * v[j]).sum::<f64>() + self.constant
    }

    /// Merges duplicate columns, drops exact zeros, and sorts by column.
    pub fn canonicalize(&mut self) {
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, c) in &self.terms {
            *map.entry(j).or_insert(0.0) += c;
        }
        self.terms = map.into_iter().filter(|&(_, c)| c != 0.0).collect();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeConstraint {
    pub cone: Cone,
    pub rows: Vec<AffineExpr>,
}

/// Quadratic objective term `coef · v_i · v_j` with `i ≤ j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadTerm {
    pub i: usize,
    pub j: usize,
    pub coef: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
    pub quadratic: Vec<QuadTerm>,
}

impl Objective {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(j, c)| c * v[j]).sum();
        let quad: f64 = self.quadratic.iter().map(|q| q.coef * v[q.i] * v[q.j]).sum();
        lin + quad + self.constant
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProgramMeta {
    pub name: String,
    pub provenance: String,
    /// Named contiguous variable ranges `(start, len)`, e.g. `"w"`.
    pub groups: BTreeMap<String, (usize, usize)>,
}

impl ProgramMeta {
    pub fn group(&self, name: &str) -> Option<std::ops::Range<usize>> {
        self.groups.get(name).map(|&(s, l)| s..s + l)
    }

    /// Display name of a variable: group name plus offset, or `v{j}`.
    pub fn var_name(&self, j: usize) -> String {
        for (name, &(s, l)) in &self.groups {
            if j >= s && j < s + l {
                return format!("{name}{}", j - s);
            }
        }
        format!("v{j}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective: Objective,
    pub constraints: Vec<ConeConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub meta: ProgramMeta,
}

impl ConicProgram {
    pub fn has_bounds(&self) -> bool {
        self.lower.iter().any(|l| l.is_finite()) || self.upper.iter().any(|u| u.is_finite())
    }

    pub fn has_integers(&self) -> bool {
        self.integer.iter().any(|&b| b)
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.iter().map(|c| c.rows.len()).sum()
    }

    /// Count of blocks per cone kind, keyed by kind name.
    pub fn cone_census(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for c in &self.constraints {
            let key = match c.cone {
                Cone::Zero(_) => "zero",
                Cone::Nonnegative(_) => "nonneg",
                Cone::SecondOrder(_) => "soc",
                Cone::RotatedSecondOrder(_) => "rsoc",
                Cone::PsdTriangle(_) => "psd",
            };
            *out.entry(key).or_insert(0) += 1;
        }
        out
    }

    /// Canonical form used for structural comparison: scalar-cone blocks
    /// first, then PSD blocks, each in original relative order.
    pub fn canonical(&self) -> ConicProgram {
        let mut p = self.clone();
        let (mut scalar, psd): (Vec<_>, Vec<_>) = p
            .constraints
            .drain(..)
            .partition(|c| !matches!(c.cone, Cone::PsdTriangle(_)));
        scalar.extend(psd);
        for c in &mut scalar {
            for r in &mut c.rows {
                r.canonicalize();
            }
        }
        p.constraints = scalar;
        let mut obj = AffineExpr { terms: p.objective.linear.clone(), constant: 0.0 };
        obj.canonicalize();
        p.objective.linear = obj.terms;
        p
    }

    /// Structural equality up to block reordering between scalar and PSD
    /// blocks; values compared to `rel_tol` relative precision.
    pub fn structurally_equal(&self, other: &ConicProgram, rel_tol: f64) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        let close = |x: f64, y: f64| (x - y).abs() <= rel_tol * x.abs().max(y.abs()).max(1e-300);
        let terms_eq = |s: &[(usize, f64)], t: &[(usize, f64)]| {
            s.len() == t.len() && s.iter().zip(t).all(|(p, q)| p.0 == q.0 && close(p.1, q.1))
        };
        a.num_vars == b.num_vars
            && a.constraints.len() == b.constraints.len()
            && close(a.objective.constant, b.objective.constant)
            && terms_eq(&a.objective.linear, &b.objective.linear)
            && a.constraints.iter().zip(&b.constraints).all(|(c, d)| {
                c.cone == d.cone
                    && c.rows.len() == d.rows.len()
                    && c.rows.iter().zip(&d.rows).all(|(r, s)| {
                        terms_eq(&r.terms, &s.terms) && close(r.constant, s.constant)
                    })
            })
    }
}

/// Incremental, single-owner program builder.
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    prog: ConicProgram,
}

impl ProgramBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            prog: ConicProgram {
                num_vars: 0,
                objective: Objective::default(),
                constraints: Vec::new(),
                lower: Vec::new(),
                upper: Vec::new(),
                integer: Vec::new(),
                meta: ProgramMeta { name: name.into(), ..Default::default() },
            },
        }
    }

    pub fn provenance(&mut self, text: impl Into<String>) -> &mut Self {
        self.prog.meta.provenance = text.into();
        self
    }

    pub fn num_vars(&self) -> usize {
        self.prog.num_vars
    }

    pub fn add_var(&mut self) -> Var {
        let v = Var(self.prog.num_vars);
        self.prog.num_vars += 1;
        self.prog.lower.push(f64::NEG_INFINITY);
        self.prog.upper.push(f64::INFINITY);
        self.prog.integer.push(false);
        v
    }

    /// Registers `count` contiguous variables under a group name.
    pub fn add_group(&mut self, name: &str, count: usize) -> Vec<Var> {
        let start = self.prog.num_vars;
        let vars: Vec<Var> = (0..count).map(|_| self.add_var()).collect();
        self.prog.meta.groups.insert(name.to_string(), (start, count));
        vars
    }

    pub fn check_var(&self, v: Var) -> Result<(), ConicError> {
        if v.0 < self.prog.num_vars {
            Ok(())
        } else {
            Err(ConicError::UnregisteredVariable { index: v.0, num_vars: self.prog.num_vars })
        }
    }

    pub fn check_expr(&self, e: &AffineExpr) -> Result<(), ConicError> {
        e.terms.iter().try_for_each(|&(j, _)| self.check_var(Var(j)))
    }

    /// Appends a block and returns its index.
    pub fn add_constraint(&mut self, cone: Cone, rows: Vec<AffineExpr>) -> Result<usize, ConicError> {
        if rows.len() != cone.rows() {
            return Err(ConicError::Invalid(format!(
                "cone {cone} expects {} rows, got {}",
                cone.rows(),
                rows.len()
            )));
        }
        for r in &rows {
            self.check_expr(r)?;
        }
        self.prog.constraints.push(ConeConstraint { cone, rows });
        Ok(self.prog.constraints.len() - 1)
    }

    pub fn add_zero(&mut self, rows: Vec<AffineExpr>) -> Result<usize, ConicError> {
        self.add_constraint(Cone::Zero(rows.len()), rows)
    }

    pub fn add_nonneg(&mut self, rows: Vec<AffineExpr>) -> Result<usize, ConicError> {
        self.add_constraint(Cone::Nonnegative(rows.len()), rows)
    }

    /// `2·u·v ≥ ‖w‖²`, `u, v ≥ 0`.
    pub fn add_rotated(
        &mut self,
        u: AffineExpr,
        v: AffineExpr,
        w: Vec<AffineExpr>,
    ) -> Result<usize, ConicError> {
        let mut rows = vec![u, v];
        rows.extend(w);
        self.add_constraint(Cone::RotatedSecondOrder(rows.len()), rows)
    }

    /// PSD constraint on a symmetric matrix given by its full entry grid;
    /// only the lower triangle is read.
    pub fn add_psd(&mut self, entries: &[Vec<AffineExpr>]) -> Result<usize, ConicError> {
        let m = entries.len();
        let mut rows = Vec::with_capacity(triangle_len(m));
        for (i, row) in entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate().take(i + 1) {
                rows.push(if i == j { e.clone() } else { e.scaled(linalg::SQRT_2) });
            }
        }
        self.add_constraint(Cone::PsdTriangle(m), rows)
    }

    pub fn add_objective(&mut self, v: Var, coef: f64) {
        self.prog.objective.linear.push((v.0, coef));
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.prog.objective.constant += c;
    }

    pub fn add_quadratic(&mut self, a: Var, b: Var, coef: f64) {
        let (i, j) = if a.0 <= b.0 { (a.0, b.0) } else { (b.0, a.0) };
        self.prog.objective.quadratic.push(QuadTerm { i, j, coef });
    }

    pub fn set_bounds(&mut self, v: Var, lo: f64, hi: f64) {
        self.prog.lower[v.0] = lo;
        self.prog.upper[v.0] = hi;
    }

    pub fn set_integer(&mut self, v: Var) {
        self.prog.integer[v.0] = true;
    }

    pub fn finish(mut self) -> ConicProgram {
        for c in &mut self.prog.constraints {
            for r in &mut c.rows {
                r.canonicalize();
            }
        }
        let mut obj = AffineExpr { terms: std::mem::take(&mut self.prog.objective.linear), constant: 0.0 };
        obj.canonicalize();
        self.prog.objective.linear = obj.terms;
        self.prog
    }
}

/// One structural defect reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Defect {
    /// Offending block index, `None` for program-level defects.
    pub block: Option<usize>,
    pub rule: DefectRule,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DefectRule {
    RowCount { expected: usize, found: usize },
    ColumnOutOfRange { row: usize, col: usize },
    NonFinite { row: usize },
    ConeTooSmall,
    VectorLength { field: &'static str, found: usize },
    InvertedBounds { var: usize },
    IntegralityOnConicProgram,
    ObjectiveColumnOutOfRange { col: usize },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.block {
            Some(b) => write!(f, "block {b}: {:?}", self.rule),
            None => write!(f, "program: {:?}", self.rule),
        }
    }
}

/// Checks every structural invariant of `p`; total, never fails.
pub fn validate(p: &ConicProgram) -> Vec<Defect> {
    let mut out = Vec::new();
    let prog = |rule| Defect { block: None, rule };
    for (field, len) in [("lower", p.lower.len()), ("upper", p.upper.len()), ("integer", p.integer.len())] {
        if len != p.num_vars {
            out.push(prog(DefectRule::VectorLength { field, found: len }));
        }
    }
    for (j, (lo, hi)) in p.lower.iter().zip(&p.upper).enumerate() {
        if lo > hi {
            out.push(prog(DefectRule::InvertedBounds { var: j }));
        }
    }
    if p.has_integers() && p.constraints.iter().any(|c| !c.cone.is_linear()) {
        out.push(prog(DefectRule::IntegralityOnConicProgram));
    }
    for &(j, _) in &p.objective.linear {
        if j >= p.num_vars {
            out.push(prog(DefectRule::ObjectiveColumnOutOfRange { col: j }));
        }
    }
    for q in &p.objective.quadratic {
        for j in [q.i, q.j] {
            if j >= p.num_vars {
                out.push(prog(DefectRule::ObjectiveColumnOutOfRange { col: j }));
            }
        }
    }
    for (b, c) in p.constraints.iter().enumerate() {
        let block = Some(b);
        if c.rows.len() != c.cone.rows() {
            out.push(Defect { block, rule: DefectRule::RowCount { expected: c.cone.rows(), found: c.rows.len() } });
        }
        let too_small = match c.cone {
            Cone::SecondOrder(k) => k < 1,
            Cone::RotatedSecondOrder(k) => k < 2,
            _ => false,
        };
        if too_small {
            out.push(Defect { block, rule: DefectRule::ConeTooSmall });
        }
        for (r, row) in c.rows.iter().enumerate() {
            if !row.constant.is_finite() || row.terms.iter().any(|t| !t.1.is_finite()) {
                out.push(Defect { block, rule: DefectRule::NonFinite { row: r } });
            }
            for &(col, _) in &row.terms {
                if col >= p.num_vars {
                    out.push(Defect { block, rule: DefectRule::ColumnOutOfRange { row: r, col } });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: u32,
    pub solve_time: f64,
    /// Backend-specific termination status, verbatim.
    pub backend_status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// Dual vector per constraint block, in the block's own row order.
    pub duals: Vec<Vec<f64>>,
    pub objective: f64,
    /// Backend dual objective. At an optimal status this is a lower bound
    /// on the optimum up to dual feasibility error.
    pub dual_objective: f64,
    pub stats: SolveStats,
    /// Farkas-type ray for `Infeasible` (dual) or `Unbounded` (primal).
    pub certificate: Option<Vec<f64>>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Per-block cone distances plus bound violation and objective drift.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub blocks: Vec<f64>,
    pub bounds: f64,
    pub objective_delta: f64,
}

impl ResidualReport {
    pub fn max_block(&self) -> f64 {
        self.blocks.iter().copied().fold(self.bounds, f64::max)
    }
}

/// Euclidean distance of a block's row values to its cone.
pub fn cone_distance(cone: Cone, r: &[f64]) -> f64 {
    match cone {
        Cone::Zero(_) => linalg::norm2(r),
        Cone::Nonnegative(_) => r.iter().map(|&x| x.min(0.0).powi(2)).sum::<f64>().sqrt(),
        Cone::SecondOrder(_) => {
            if r.is_empty() {
                0.0
            } else {
                linalg::soc_distance(r[0], &r[1..])
            }
        }
        Cone::RotatedSecondOrder(_) => {
            let s = linalg::SQRT_2;
            let mut x = vec![(r[0] - r[1]) / s];
            x.extend_from_slice(&r[2..]);
            linalg::soc_distance((r[0] + r[1]) / s, &x)
        }
        Cone::PsdTriangle(order) => linalg::psd_distance(&smat(r, order)),
    }
}

pub fn residuals(p: &ConicProgram, s: &Solution) -> Result<ResidualReport, ConicError> {
    if s.status != SolveStatus::Optimal {
        return Err(ConicError::StatusNotOptimal(s.status));
    }
    if s.primal.len() != p.num_vars {
        return Err(ConicError::Invalid(format!(
            "primal has length {}, program has {} variables",
            s.primal.len(),
            p.num_vars
        )));
    }
    let v = &s.primal;
    let blocks = p
        .constraints
        .iter()
        .map(|c| {
            let vals: Vec<f64> = c.rows.iter().map(|r| r.eval(v)).collect();
            cone_distance(c.cone, &vals)
        })
        .collect();
    let bounds = v
        .iter()
        .enumerate()
        .map(|(j, &x)| (p.lower[j] - x).max(0.0).max(x - p.upper[j]))
        .fold(0.0, f64::max);
    Ok(ResidualReport {
        blocks,
        bounds,
        objective_delta: (p.objective.eval(v) - s.objective).abs(),
    })
}

/// Number formatting shared by the text exporters: shortest round-trip
/// decimal in a readable range, exponent notation outside it.
pub(crate) fn fmt_num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    let a = v.abs();
    if v == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(primal: Vec<f64>, objective: f64) -> Solution {
        Solution {
            status: SolveStatus::Optimal,
            primal,
            duals: vec![],
            objective,
            dual_objective: objective,
            stats: SolveStats::default(),
            certificate: None,
        }
    }

    #[test]
    fn empty_program_is_valid() {
        let p = ProgramBuilder::new("empty").finish();
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn psd_block_with_wrong_row_count() {
        let mut b = ProgramBuilder::new("psd");
        let x = b.add_var();
        let mut p = b.finish();
        p.constraints.push(ConeConstraint {
            cone: Cone::PsdTriangle(3),
            rows: vec![AffineExpr::var(x); 5],
        });
        let d = validate(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].block, Some(0));
        assert_eq!(d[0].rule, DefectRule::RowCount { expected: 6, found: 5 });
    }

    #[test]
    fn soc_block_with_out_of_range_column() {
        let mut b = ProgramBuilder::new("soc");
        b.add_var();
        let mut p = b.finish();
        p.constraints.push(ConeConstraint {
            cone: Cone::SecondOrder(2),
            rows: vec![AffineExpr::constant(1.0), AffineExpr { terms: vec![(4, 1.0)], constant: 0.0 }],
        });
        let d = validate(&p);
        assert_eq!(d, vec![Defect { block: Some(0), rule: DefectRule::ColumnOutOfRange { row: 1, col: 4 } }]);
    }

    #[test]
    fn builder_rejects_unregistered_variable() {
        let mut b = ProgramBuilder::new("x");
        let err = b.add_nonneg(vec![AffineExpr::var(Var(3))]).unwrap_err();
        assert!(matches!(err, ConicError::UnregisteredVariable { index: 3, .. }));
    }

    #[test]
    fn residuals_of_interior_point_vanish() {
        let mut b = ProgramBuilder::new("lp");
        let x = b.add_var();
        let y = b.add_var();
        b.add_nonneg(vec![AffineExpr::var(x).plus(-1.0)]).unwrap();
        b.add_zero(vec![AffineExpr::var(x).term(y, -1.0)]).unwrap();
        b.add_constraint(Cone::SecondOrder(2), vec![AffineExpr::var(x).plus(1.0), AffineExpr::var(y)])
            .unwrap();
        b.add_objective(x, 1.0);
        let p = b.finish();
        let rep = residuals(&p, &optimal(vec![2.0, 2.0], 2.0)).unwrap();
        assert!(rep.max_block() < 1e-12);
        assert!(rep.objective_delta < 1e-12);
    }

    #[test]
    fn psd_residual_is_negative_eigenvalue_norm() {
        let mut b = ProgramBuilder::new("psd");
        let a = b.add_var();
        let c = b.add_var();
        b.add_psd(&[
            vec![AffineExpr::var(a)],
            vec![AffineExpr::constant(0.0), AffineExpr::var(c)],
        ])
        .unwrap();
        let p = b.finish();
        let rep = residuals(&p, &optimal(vec![1.0, -0.1], 0.0)).unwrap();
        assert!((rep.blocks[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_residual_is_linear_in_perturbation() {
        let mut b = ProgramBuilder::new("eq");
        let x = b.add_var();
        let y = b.add_var();
        b.add_zero(vec![AffineExpr::var(x).term(y, 3.0).plus(-4.0)]).unwrap();
        let p = b.finish();
        let base = residuals(&p, &optimal(vec![1.0, 1.0], 0.0)).unwrap().blocks[0];
        let delta = 0.25;
        let pert = residuals(&p, &optimal(vec![1.0, 1.0 + delta], 0.0)).unwrap().blocks[0];
        assert!(base < 1e-15);
        assert!((pert - 3.0 * delta).abs() < 1e-12);
    }

    #[test]
    fn residuals_require_optimal_status() {
        let p = ProgramBuilder::new("e").finish();
        let mut s = optimal(vec![], 0.0);
        s.status = SolveStatus::Infeasible;
        assert!(matches!(residuals(&p, &s), Err(ConicError::StatusNotOptimal(_))));
    }

    #[test]
    fn rotated_cone_distance() {
        assert_eq!(cone_distance(Cone::RotatedSecondOrder(3), &[1.0, 2.0, 2.0]), 0.0);
        assert!(cone_distance(Cone::RotatedSecondOrder(3), &[1.0, 1.0, 2.0]) > 0.0);
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1000.0), "1000");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1e-9), "1e-9");
    }
}
