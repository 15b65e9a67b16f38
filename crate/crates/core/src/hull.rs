//! Rank-one hull mathematics for `t ≥ (dᵀx)²` under sign indicators.
//!
//! Two-sided sets impose `x_i z_i ≥ 0` and `x_i (1 − z_i) ≤ 0`, so `z_i = 1`
//! forces `x_i ≥ 0` and `z_i = 0` forces `x_i ≤ 0`. One-sided sets keep only
//! the second constraint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{AffineExpr, ConicError, ConicProgram, ProgramBuilder, Var};

#[derive(Debug, Error, PartialEq)]
pub enum HullError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("z[{index}] = {value} lies outside [0, 1]")]
    ZOutOfBounds { index: usize, value: f64 },
    #[error("loss parameters must be positive (d = {d}, lambda = {lambda})")]
    NonPositiveParams { d: f64, lambda: f64 },
    #[error("enumeration oracle supports n ≤ {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("rank-one set needs n ≥ 1")]
    Empty,
    #[error("non-finite input")]
    NonFinite,
    #[error("{0}")]
    Conic(String),
}

impl From<ConicError> for HullError {
    fn from(e: ConicError) -> Self {
        HullError::Conic(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sidedness {
    TwoSided,
    OneSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneSet {
    pub d: Vec<f64>,
    pub sidedness: Sidedness,
}

impl RankOneSet {
    pub fn new(d: Vec<f64>, sidedness: Sidedness) -> Result<Self, HullError> {
        if d.is_empty() {
            return Err(HullError::Empty);
        }
        if d.iter().any(|v| !v.is_finite()) {
            return Err(HullError::NonFinite);
        }
        Ok(Self { d, sidedness })
    }

    pub fn two_sided(d: Vec<f64>) -> Result<Self, HullError> {
        Self::new(d, Sidedness::TwoSided)
    }

    pub fn one_sided(d: Vec<f64>) -> Result<Self, HullError> {
        Self::new(d, Sidedness::OneSided)
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn supp_plus(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.d[i] > 0.0).collect()
    }

    pub fn supp_minus(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.d[i] < 0.0).collect()
    }

    pub fn supp(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.d[i] != 0.0).collect()
    }

    /// `Some(+1)` when `d ≥ 0`, `Some(−1)` when `d ≤ 0`, `None` for mixed signs.
    pub fn uniform_sign(&self) -> Option<f64> {
        if self.d.iter().all(|&v| v >= 0.0) {
            Some(1.0)
        } else if self.d.iter().all(|&v| v <= 0.0) {
            Some(-1.0)
        } else {
            None
        }
    }

    fn check(&self, x: &[f64], z: &[f64]) -> Result<(), HullError> {
        for v in [x.len(), z.len()] {
            if v != self.n() {
                return Err(HullError::DimensionMismatch { expected: self.n(), found: v });
            }
        }
        check_unit(z)
    }
}

pub(crate) fn check_unit(z: &[f64]) -> Result<(), HullError> {
    match z.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(HullError::ZOutOfBounds { index, value: z[index] }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullPoint {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    pub d: f64,
    pub lambda: f64,
}

impl LossParams {
    pub fn new(d: f64, lambda: f64) -> Result<Self, HullError> {
        if d > 0.0 && lambda > 0.0 && d.is_finite() && lambda.is_finite() {
            Ok(Self { d, lambda })
        } else {
            Err(HullError::NonPositiveParams { d, lambda })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearObjective {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

/// `num² / den` with `0/0 = 0` and `+∞` for a positive numerator over zero.
fn perspective(num: f64, den: f64) -> f64 {
    let sq = num * num;
    if sq == 0.0 {
        0.0
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        sq / den
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Denominators `(D₊, D₋)` of the two-sided inequality.
pub fn two_sided_denominators(d: &[f64], z: &[f64]) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for (&di, &zi) in d.iter().zip(z) {
        if di > 0.0 {
            a += zi;
            b += 1.0 - zi;
        } else if di < 0.0 {
            a += 1.0 - zi;
            b += zi;
        }
    }
    (a.min(1.0), b.min(1.0))
}

pub fn eval_hull_rhs(set: &RankOneSet, x: &[f64], z: &[f64]) -> Result<f64, HullError> {
    set.check(x, z)?;
    let y = dot(&set.d, x);
    let (dp, dm) = two_sided_denominators(&set.d, z);
    Ok(perspective(y.max(0.0), dp) + perspective(y.min(0.0), dm))
}

pub fn eval_one_sided_rhs(set: &RankOneSet, x: &[f64], z: &[f64]) -> Result<f64, HullError> {
    set.check(x, z)?;
    let y = dot(&set.d, x);
    let Some(sign) = set.uniform_sign() else {
        return Ok(y * y);
    };
    let den: f64 = set.supp().iter().map(|&i| z[i]).sum::<f64>().min(1.0);
    // For d ≤ 0 the roles of the positive and negative parts swap.
    let (pert, free) = if sign > 0.0 { (y.max(0.0), y.min(0.0)) } else { (y.min(0.0), y.max(0.0)) };
    Ok(perspective(pert, den) + free * free)
}

pub fn eval_rhs(set: &RankOneSet, x: &[f64], z: &[f64]) -> Result<f64, HullError> {
    match set.sidedness {
        Sidedness::TwoSided => eval_hull_rhs(set, x, z),
        Sidedness::OneSided => eval_one_sided_rhs(set, x, z),
    }
}

pub fn check_membership(set: &RankOneSet, p: &HullPoint, tol: f64) -> Result<bool, HullError> {
    let rhs = eval_rhs(set, &p.x, &p.z)?;
    Ok(p.t >= rhs - tol)
}

/// Auxiliary variables and row counts emitted by an SOCP hull block.
#[derive(Debug, Clone, PartialEq)]
pub struct SocpBlock {
    pub w_plus: Var,
    pub w_minus: Var,
    pub r_plus: Var,
    pub r_minus: Var,
    pub new_vars: usize,
    pub linear_rows: usize,
    pub rotated_cones: usize,
}

fn check_handles(b: &ProgramBuilder, n: usize, x: &[Var], z: &[Var], t: Var) -> Result<(), HullError> {
    for len in [x.len(), z.len()] {
        if len != n {
            return Err(HullError::DimensionMismatch { expected: n, found: len });
        }
    }
    for &v in x.iter().chain(z).chain(std::iter::once(&t)) {
        b.check_var(v)?;
    }
    Ok(())
}

/// Emits `Σ_{supp₊} z + Σ_{supp₋} (1 − z)` (or its mirror when `flip`).
fn z_side(d: &[f64], z: &[Var], flip: bool) -> AffineExpr {
    let mut e = AffineExpr::new();
    for (&di, &zi) in d.iter().zip(z) {
        if di == 0.0 {
            continue;
        }
        if (di > 0.0) != flip {
            e.add_term(zi, 1.0);
        } else {
            e.add_term(zi, -1.0);
            e.constant += 1.0;
        }
    }
    e
}

/// Shared skeleton: `dᵀx = w₊ + w₋`, `w₊ ≥ 0`, `w₋ ≤ 0`, `t·r± ≥ w±²`,
/// `r± ≤ 1`, and `r± ≤ cap±` for each provided cap.
fn emit_block(
    b: &mut ProgramBuilder,
    d: &[f64],
    x: &[Var],
    t: Var,
    cap_plus: Option<AffineExpr>,
    cap_minus: Option<AffineExpr>,
) -> Result<SocpBlock, HullError> {
    let start = b.num_vars();
    let w_plus = b.add_var();
    let w_minus = b.add_var();
    let r_plus = b.add_var();
    let r_minus = b.add_var();

    let mut dx = AffineExpr::new();
    for (&di, &xi) in d.iter().zip(x) {
        if di != 0.0 {
            dx.add_term(xi, di);
        }
    }
    dx.add_term(w_plus, -1.0);
    dx.add_term(w_minus, -1.0);
    b.add_zero(vec![dx])?;

    let mut nonneg = vec![
        AffineExpr::var(w_plus),
        AffineExpr::var(w_minus).scaled(-1.0),
        AffineExpr::constant(1.0).term(r_plus, -1.0),
        AffineExpr::constant(1.0).term(r_minus, -1.0),
    ];
    for (cap, r) in [(cap_plus, r_plus), (cap_minus, r_minus)] {
        if let Some(mut cap) = cap {
            cap.add_term(r, -1.0);
            nonneg.push(cap);
        }
    }
    let linear_rows = 1 + nonneg.len();
    b.add_nonneg(nonneg)?;

    // 2·t·(r/2) ≥ w²; the second entry also keeps r ≥ 0.
    for (w, r) in [(w_plus, r_plus), (w_minus, r_minus)] {
        b.add_rotated(AffineExpr::var(t), AffineExpr::new().term(r, 0.5), vec![AffineExpr::var(w)])?;
    }
    Ok(SocpBlock {
        w_plus,
        w_minus,
        r_plus,
        r_minus,
        new_vars: b.num_vars() - start,
        linear_rows,
        rotated_cones: 2,
    })
}

/// SOCP form of the two-sided hull inequality on registered `x, z, t`.
pub fn build_two_sided_socp(
    b: &mut ProgramBuilder,
    set: &RankOneSet,
    x: &[Var],
    z: &[Var],
    t: Var,
) -> Result<SocpBlock, HullError> {
    check_handles(b, set.n(), x, z, t)?;
    let plus = z_side(&set.d, z, false);
    let minus = z_side(&set.d, z, true);
    emit_block(b, &set.d, x, t, Some(plus), Some(minus))
}

/// SOCP form of the one-sided hull. Mixed-sign `d` reduces to `t ≥ (dᵀx)²`,
/// emitted with both caps dropped (`r± ≤ 1` only).
pub fn build_one_sided_socp(
    b: &mut ProgramBuilder,
    set: &RankOneSet,
    x: &[Var],
    z: &[Var],
    t: Var,
) -> Result<SocpBlock, HullError> {
    check_handles(b, set.n(), x, z, t)?;
    let mut sum = AffineExpr::new();
    for &i in &set.supp() {
        sum.add_term(z[i], 1.0);
    }
    match set.uniform_sign() {
        Some(s) if s > 0.0 => emit_block(b, &set.d, x, t, Some(sum), None),
        Some(_) => emit_block(b, &set.d, x, t, None, Some(sum)),
        None => emit_block(b, &set.d, x, t, None, None),
    }
}

pub fn build_socp(
    b: &mut ProgramBuilder,
    set: &RankOneSet,
    x: &[Var],
    z: &[Var],
    t: Var,
) -> Result<SocpBlock, HullError> {
    match set.sidedness {
        Sidedness::TwoSided => build_two_sided_socp(b, set, x, z, t),
        Sidedness::OneSided => build_one_sided_socp(b, set, x, z, t),
    }
}

/// `min αᵀx + βᵀz + γt` over the SOCP hull with `0 ≤ z ≤ 1`. Variable
/// groups `x`, `z`, `t` are registered in that order.
pub fn hull_program(set: &RankOneSet, obj: &LinearObjective) -> Result<ConicProgram, HullError> {
    let n = set.n();
    for len in [obj.alpha.len(), obj.beta.len()] {
        if len != n {
            return Err(HullError::DimensionMismatch { expected: n, found: len });
        }
    }
    let mut b = ProgramBuilder::new(format!("hull-{n}"));
    b.provenance("rank-one hull relaxation");
    let x = b.add_group("x", n);
    let z = b.add_group("z", n);
    let t = b.add_group("t", 1)[0];
    build_socp(&mut b, set, &x, &z, t)?;
    let mut rows = Vec::with_capacity(2 * n);
    for &zi in &z {
        rows.push(AffineExpr::var(zi));
        rows.push(AffineExpr::constant(1.0).term(zi, -1.0));
    }
    b.add_nonneg(rows)?;
    for i in 0..n {
        b.add_objective(x[i], obj.alpha[i]);
        b.add_objective(z[i], obj.beta[i]);
    }
    b.add_objective(t, obj.gamma);
    Ok(b.finish())
}

pub fn phi_loss(x: f64, params: &LossParams) -> Result<f64, HullError> {
    let p = LossParams::new(params.d, params.lambda)?;
    if x <= 0.0 {
        Ok(0.0)
    } else if x >= (p.lambda / p.d).sqrt() {
        Ok(p.lambda)
    } else {
        Ok(2.0 * (p.lambda * p.d).sqrt() * x - p.d * x * x)
    }
}

pub fn phi_argmin_z(x: f64, params: &LossParams) -> Result<f64, HullError> {
    let p = LossParams::new(params.d, params.lambda)?;
    if x <= 0.0 {
        Ok(0.0)
    } else {
        Ok(((p.d / p.lambda).sqrt() * x).min(1.0))
    }
}

/// The inner objective `λz − d·x² + d·x₊²/z + d·x₋²` minimised over `z`
/// by the closed forms above.
pub fn phi_inner(x: f64, z: f64, params: &LossParams) -> f64 {
    let (d, l) = (params.d, params.lambda);
    l * z - d * x * x + d * perspective(x.max(0.0), z) + d * x.min(0.0).powi(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LinearOptResult {
    Unbounded,
    Optimal { value: f64, x: Vec<f64>, z: Vec<f64>, t: f64 },
}

impl LinearOptResult {
    pub fn value(&self) -> Option<f64> {
        match self {
            LinearOptResult::Optimal { value, .. } => Some(*value),
            LinearOptResult::Unbounded => None,
        }
    }
}

pub const ORACLE_MAX_N: usize = 20;

/// Proportionality constant `η` with `α = η·d`, if any.
pub fn proportionality(d: &[f64], alpha: &[f64]) -> Option<f64> {
    let na = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
    let dd = dot(d, d);
    if dd == 0.0 {
        return (na == 0.0).then_some(0.0);
    }
    let eta = dot(d, alpha) / dd;
    let res = alpha.iter().zip(d).map(|(a, di)| (a - eta * di).powi(2)).sum::<f64>().sqrt();
    (res <= 1e-9 * na).then_some(eta)
}

/// Exact optimum of `min αᵀx + βᵀz + γt` over the mixed-integer set by full
/// enumeration of `z ∈ {0,1}ⁿ`.
pub fn exact_linear_opt(set: &RankOneSet, obj: &LinearObjective) -> Result<LinearOptResult, HullError> {
    let n = set.n();
    if n > ORACLE_MAX_N {
        return Err(HullError::TooLarge { n, max: ORACLE_MAX_N });
    }
    for len in [obj.alpha.len(), obj.beta.len()] {
        if len != n {
            return Err(HullError::DimensionMismatch { expected: n, found: len });
        }
    }
    if obj.gamma < 0.0 {
        return Ok(LinearOptResult::Unbounded);
    }
    if obj.gamma == 0.0 {
        if obj.alpha.iter().any(|&a| a != 0.0) {
            return Ok(LinearOptResult::Unbounded);
        }
        let z: Vec<f64> = obj.beta.iter().map(|&b| if b < 0.0 { 1.0 } else { 0.0 }).collect();
        let value = obj.beta.iter().map(|&b| b.min(0.0)).sum();
        return Ok(LinearOptResult::Optimal { value, x: vec![0.0; n], z, t: 0.0 });
    }
    let Some(eta) = proportionality(&set.d, &obj.alpha) else {
        return Ok(LinearOptResult::Unbounded);
    };
    let gamma = obj.gamma;
    let d = &set.d;

    let mut best: Option<(f64, Vec<f64>, f64, Option<usize>)> = None;
    for mask in 0u32..(1u32 << n) {
        // Lexicographic order with z[0] as the most significant digit.
        let z: Vec<f64> = (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as f64).collect();
        let (pos, neg) = direction_witnesses(d, &z, set.sidedness);
        let lo = if neg.is_some() { f64::NEG_INFINITY } else { 0.0 };
        let hi = if pos.is_some() { f64::INFINITY } else { 0.0 };
        let y = (-eta / (2.0 * gamma)).clamp(lo, hi);
        let value = gamma * y * y + eta * y + dot(&obj.beta, &z);
        let witness = if y > 0.0 { pos } else if y < 0.0 { neg } else { None };
        let better = match &best {
            None => true,
            Some((b, ..)) => value < *b - 1e-12 * (1.0 + b.abs()),
        };
        if better {
            best = Some((value, z, y, witness));
        }
    }
    let (value, z, y, witness) = best.expect("at least one z");
    let mut x = vec![0.0; n];
    if let Some(i) = witness {
        x[i] = y / d[i];
    }
    Ok(LinearOptResult::Optimal { value, x, z, t: y * y })
}

/// First index that can push `dᵀx` up (resp. down) under integer `z`.
fn direction_witnesses(d: &[f64], z: &[f64], side: Sidedness) -> (Option<usize>, Option<usize>) {
    let mut pos = None;
    let mut neg = None;
    for i in 0..d.len() {
        if d[i] == 0.0 {
            continue;
        }
        let on = z[i] == 1.0;
        // Allowed signs of x_i: two-sided pins the sign to z_i, one-sided
        // frees x_i when z_i = 1 and keeps x_i ≤ 0 otherwise.
        let (can_up, can_down) = match side {
            Sidedness::TwoSided => (on, !on),
            Sidedness::OneSided => (on, true),
        };
        // x_i direction → dᵀx direction.
        let (yu, yd) = if d[i] > 0.0 { (can_up, can_down) } else { (can_down, can_up) };
        if yu && pos.is_none() {
            pos = Some(i);
        }
        if yd && neg.is_none() {
            neg = Some(i);
        }
    }
    (pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(d: f64, l: f64) -> LossParams {
        LossParams::new(d, l).unwrap()
    }

    #[test]
    fn rhs_examples() {
        let s1 = RankOneSet::two_sided(vec![1.0]).unwrap();
        assert!((eval_hull_rhs(&s1, &[0.5], &[0.5]).unwrap() - 0.5).abs() < 1e-15);
        let s2 = RankOneSet::two_sided(vec![1.0, 1.0]).unwrap();
        assert_eq!(eval_hull_rhs(&s2, &[0.0, 0.0], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((eval_hull_rhs(&s2, &[0.5, -0.2], &[0.3, 0.1]).unwrap() - 0.225).abs() < 1e-15);
    }

    #[test]
    fn rhs_infinite_on_closure_boundary() {
        let s = RankOneSet::two_sided(vec![1.0]).unwrap();
        assert_eq!(eval_hull_rhs(&s, &[1.0], &[0.0]).unwrap(), f64::INFINITY);
        assert_eq!(eval_hull_rhs(&s, &[0.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_z_outside_unit_box() {
        let s = RankOneSet::two_sided(vec![1.0]).unwrap();
        assert_eq!(
            eval_hull_rhs(&s, &[0.0], &[1.5]),
            Err(HullError::ZOutOfBounds { index: 0, value: 1.5 })
        );
        assert!(matches!(eval_hull_rhs(&s, &[0.0, 1.0], &[0.5]), Err(HullError::DimensionMismatch { .. })));
    }

    #[test]
    fn membership_examples() {
        let s = RankOneSet::two_sided(vec![1.0]).unwrap();
        let p = HullPoint { x: vec![0.5], z: vec![0.5], t: 0.4 };
        assert!(!check_membership(&s, &p, 1e-9).unwrap());
        let s2 = RankOneSet::two_sided(vec![1.0, 1.0]).unwrap();
        let q = HullPoint { x: vec![1.0, 0.0], z: vec![1.0, 0.0], t: 1.0 };
        assert!(check_membership(&s2, &q, 0.0).unwrap());
        assert_eq!(eval_hull_rhs(&s2, &q.x, &q.z).unwrap(), 1.0);
        let origin = HullPoint { x: vec![0.0, 0.0], z: vec![0.2, 0.9], t: 0.0 };
        assert!(check_membership(&RankOneSet::one_sided(vec![3.0, -1.0]).unwrap(), &origin, 0.0).unwrap());
    }

    #[test]
    fn one_sided_examples() {
        let mixed = RankOneSet::one_sided(vec![1.0, -1.0]).unwrap();
        assert_eq!(eval_one_sided_rhs(&mixed, &[1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let pos = RankOneSet::one_sided(vec![1.0, 1.0]).unwrap();
        assert_eq!(eval_one_sided_rhs(&pos, &[1.0, 0.0], &[0.25, 0.25]).unwrap(), 2.0);
        assert_eq!(eval_one_sided_rhs(&pos, &[-1.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        let neg = RankOneSet::one_sided(vec![-1.0, -1.0]).unwrap();
        assert_eq!(eval_one_sided_rhs(&neg, &[1.0, 0.0], &[0.25, 0.25]).unwrap(), 2.0);
    }

    #[test]
    fn socp_block_structure() {
        let s = RankOneSet::two_sided(vec![1.0, 2.0]).unwrap();
        let mut b = ProgramBuilder::new("blk");
        let x = b.add_group("x", 2);
        let z = b.add_group("z", 2);
        let t = b.add_var();
        let blk = build_two_sided_socp(&mut b, &s, &x, &z, t).unwrap();
        assert_eq!((blk.new_vars, blk.rotated_cones, blk.linear_rows), (4, 2, 7));
        let p = b.finish();
        assert!(crate::conic::validate(&p).is_empty());
        assert_eq!(p.cone_census()["rsoc"], 2);
    }

    #[test]
    fn socp_rejects_unregistered() {
        let s = RankOneSet::two_sided(vec![1.0]).unwrap();
        let mut b = ProgramBuilder::new("blk");
        let x = b.add_var();
        let err = build_two_sided_socp(&mut b, &s, &[x], &[Var(7)], x).unwrap_err();
        assert!(matches!(err, HullError::Conic(_)));
    }

    #[test]
    fn phi_examples() {
        let p = lp(1.0, 1.0);
        assert_eq!(phi_loss(-3.0, &p).unwrap(), 0.0);
        assert_eq!(phi_loss(2.0, &p).unwrap(), 1.0);
        assert!((phi_loss(0.5, &p).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(phi_argmin_z(0.0, &p).unwrap(), 0.0);
        assert_eq!(phi_argmin_z(0.5, &p).unwrap(), 0.5);
        assert_eq!(phi_argmin_z(5.0, &p).unwrap(), 1.0);
        assert!(phi_loss(1.0, &LossParams { d: 0.0, lambda: 1.0 }).is_err());
    }

    #[test]
    fn phi_boundary_is_exact() {
        for (d, l) in [(1.0f64, 1.0f64), (0.3, 2.7), (5.0, 0.01), (0.123, 0.456)] {
            let x = (l / d).sqrt();
            assert_eq!(phi_loss(x, &lp(d, l)).unwrap(), l);
        }
    }

    #[test]
    fn exact_oracle_examples() {
        let s = RankOneSet::two_sided(vec![1.0]).unwrap();
        let obj = LinearObjective { alpha: vec![-1.0], beta: vec![0.1], gamma: 1.0 };
        match exact_linear_opt(&s, &obj).unwrap() {
            LinearOptResult::Optimal { value, x, z, t } => {
                assert!((value + 0.15).abs() < 1e-15);
                assert_eq!((x, z, t), (vec![0.5], vec![1.0], 0.25));
            }
            r => panic!("{r:?}"),
        }
        let neg = LinearObjective { alpha: vec![-1.0], beta: vec![0.1], gamma: -1.0 };
        assert_eq!(exact_linear_opt(&s, &neg).unwrap(), LinearOptResult::Unbounded);
        let s2 = RankOneSet::two_sided(vec![1.0, 1.0]).unwrap();
        let np = LinearObjective { alpha: vec![1.0, 2.0], beta: vec![0.0, 0.0], gamma: 1.0 };
        assert_eq!(exact_linear_opt(&s2, &np).unwrap(), LinearOptResult::Unbounded);
    }

    #[test]
    fn exact_oracle_matches_dense_grid() {
        // min −x + 0.1z + t, t = x², x·z ≥ 0, x(1−z) ≤ 0 on a grid over x.
        let mut best = f64::INFINITY;
        for z in [0.0, 1.0] {
            for k in -2000..=2000 {
                let x = k as f64 * 1e-3;
                if (z == 1.0 && x < 0.0) || (z == 0.0 && x > 0.0) {
                    continue;
                }
                best = best.min(-x + 0.1 * z + x * x);
            }
        }
        assert!((best + 0.15).abs() < 1e-9);
    }

    #[test]
    fn one_sided_oracle_allows_free_sign_when_on() {
        let s = RankOneSet::one_sided(vec![1.0]).unwrap();
        let obj = LinearObjective { alpha: vec![1.0], beta: vec![0.0], gamma: 1.0 };
        // z = 0 forces x ≤ 0 which already reaches y = −0.5.
        assert!((exact_linear_opt(&s, &obj).unwrap().value().unwrap() + 0.25).abs() < 1e-15);
        let obj = LinearObjective { alpha: vec![-1.0], beta: vec![0.3], gamma: 1.0 };
        // Switching z on reaches 0.25 − 0.5 + 0.3 = 0.05, worse than x = 0.
        assert_eq!(exact_linear_opt(&s, &obj).unwrap().value().unwrap(), 0.0);
    }

    fn integer_point(d_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(prop_oneof![-3.0..3.0f64, Just(0.0)], d_len),
            prop::collection::vec(prop::bool::ANY, d_len),
            prop::collection::vec(0.0..2.0f64, d_len),
        )
            .prop_map(|(d, on, mag)| {
                let z: Vec<f64> = on.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
                let x: Vec<f64> = on.iter().zip(&mag).map(|(&b, &m)| if b { m } else { -m }).collect();
                (d, x, z)
            })
    }

    fn fractional(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-3.0..3.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(0.0..=1.0f64, n),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn integer_points_are_valid((d, x, z) in (1usize..=8).prop_flat_map(integer_point)) {
            let s = RankOneSet::two_sided(d.clone()).unwrap();
            let t = dot(&d, &x).powi(2);
            let pt = HullPoint { x: x.clone(), z: z.clone(), t };
            prop_assert!(check_membership(&s, &pt, 1e-9).unwrap());
            let s1 = RankOneSet::one_sided(d).unwrap();
            let pt = HullPoint { x, z, t };
            prop_assert!(check_membership(&s1, &pt, 1e-9).unwrap());
        }

        #[test]
        fn midpoint_convexity(
            (d, x1, z1) in (1usize..=6).prop_flat_map(fractional),
            seed in prop::collection::vec(-2.0..2.0f64, 6),
            zs in prop::collection::vec(0.0..=1.0f64, 6),
        ) {
            let n = d.len();
            let (x2, z2) = (&seed[..n], &zs[..n]);
            let s = RankOneSet::two_sided(d).unwrap();
            let xm: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| 0.5 * (a + b)).collect();
            let zm: Vec<f64> = z1.iter().zip(z2).map(|(a, b)| 0.5 * (a + b)).collect();
            let r1 = eval_hull_rhs(&s, &x1, &z1).unwrap();
            let r2 = eval_hull_rhs(&s, x2, z2).unwrap();
            let rm = eval_hull_rhs(&s, &xm, &zm).unwrap();
            prop_assert!(rm <= 0.5 * (r1 + r2) + 1e-9);
        }

        #[test]
        fn sign_flip_equivariance((d, x, z) in (1usize..=6).prop_flat_map(fractional)) {
            let s = RankOneSet::two_sided(d.clone()).unwrap();
            let mut d2 = d.clone();
            let mut x2 = x.clone();
            let mut z2 = z.clone();
            for i in 0..d.len() {
                if d[i] < 0.0 {
                    d2[i] = -d[i];
                    x2[i] = -x[i];
                    z2[i] = 1.0 - z[i];
                }
            }
            let a = eval_hull_rhs(&s, &x, &z).unwrap();
            let b = eval_hull_rhs(&RankOneSet::two_sided(d2).unwrap(), &x2, &z2).unwrap();
            prop_assert!(a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }

        #[test]
        fn mixed_sign_one_sided_is_plain_square((d, x, z) in (2usize..=6).prop_flat_map(fractional)) {
            let mut d = d;
            d[0] = d[0].abs() + 0.1;
            d[1] = -(d[1].abs() + 0.1);
            let s = RankOneSet::one_sided(d.clone()).unwrap();
            prop_assert_eq!(eval_one_sided_rhs(&s, &x, &z).unwrap(), dot(&d, &x).powi(2));
        }

        #[test]
        fn phi_properties(x in -3.0..3.0f64, dx in 0.0..0.5f64, d in 0.05..5.0f64, l in 0.05..5.0f64) {
            let p = lp(d, l);
            let a = phi_loss(x, &p).unwrap();
            let b = phi_loss(x + dx, &p).unwrap();
            prop_assert!((0.0..=l).contains(&a));
            prop_assert!(b >= a - 1e-12);
            if x >= (l / d).sqrt() {
                prop_assert_eq!(a, l);
            }
            let z = phi_argmin_z(x, &p).unwrap();
            prop_assert!((phi_inner(x, z, &p) - a).abs() <= 1e-9 * (1.0 + a.abs()) + 1e-9 * d * x * x);
        }
    }
}
