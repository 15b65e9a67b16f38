//! Lifted-space inequalities for points `(x, X, z)` with `X ⪰ xxᵀ`:
//! subset copositive matrices, their PSD extended forms, a grid
//! copositivity oracle, and the big-M model.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{AffineExpr, ConicError, ConicProgram, ProgramBuilder, Var};
use crate::hull::{self, RankOneSet, Sidedness};
use crate::linalg::{min_eigenvalue, psd_distance};
use crate::svm::{SvmDataset, SvmMode};

#[derive(Debug, Error, PartialEq)]
pub enum RelaxError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid subset: {0}")]
    BadSubset(String),
    #[error("grid with {points} points exceeds the cap of {cap}")]
    TooLarge { points: u128, cap: u128 },
    #[error("X is not PSD (min eigenvalue {0})")]
    XNotPsd(f64),
    #[error("copositivity verdicts disagree beyond one grid cell (grid minimum {grid_min}, cell {cell})")]
    Disagreement { grid_min: f64, cell: f64 },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("{0}")]
    Backend(String),
}

impl From<ConicError> for RelaxError {
    fn from(e: ConicError) -> Self {
        RelaxError::Backend(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPoint {
    pub x: Vec<f64>,
    pub big_x: DMatrix<f64>,
    pub z: Vec<f64>,
}

impl ExtendedPoint {
    /// Rank-one lift `X = xxᵀ`.
    pub fn lifted(x: Vec<f64>, z: Vec<f64>) -> Self {
        let v = nalgebra::DVector::from_column_slice(&x);
        Self { big_x: &v * v.transpose(), x, z }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    fn check(&self) -> Result<(), RelaxError> {
        let n = self.n();
        if self.z.len() != n || self.big_x.nrows() != n || self.big_x.ncols() != n {
            return Err(RelaxError::DimensionMismatch(format!(
                "x has {n} entries, z {}, X is {}×{}",
                self.z.len(),
                self.big_x.nrows(),
                self.big_x.ncols()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetConstraintSpec {
    pub s: Vec<usize>,
    pub side: Sidedness,
}

impl SubsetConstraintSpec {
    pub fn new(mut s: Vec<usize>, side: Sidedness, n: usize) -> Result<Self, RelaxError> {
        s.sort_unstable();
        s.dedup();
        if s.is_empty() {
            return Err(RelaxError::BadSubset("empty".into()));
        }
        if let Some(&i) = s.iter().find(|&&i| i >= n) {
            return Err(RelaxError::BadSubset(format!("index {i} ≥ n = {n}")));
        }
        Ok(Self { s, side })
    }
}

/// `[[Σ_S z, −x_Sᵀ], [−x_S, X_S]]` and, two-sided only,
/// `[[Σ_S (1 − z), x_Sᵀ], [x_S, X_S]]`.
pub fn copositive_matrices_for_subset(
    pt: &ExtendedPoint,
    spec: &SubsetConstraintSpec,
) -> Result<Vec<DMatrix<f64>>, RelaxError> {
    pt.check()?;
    if spec.s.iter().any(|&i| i >= pt.n()) {
        return Err(RelaxError::DimensionMismatch(format!("subset {:?} for n = {}", spec.s, pt.n())));
    }
    let s = &spec.s;
    let k = s.len();
    let build = |corner: f64, sign: f64| {
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m[(0, 0)] = corner;
        for (r, &i) in s.iter().enumerate() {
            m[(r + 1, 0)] = sign * pt.x[i];
            m[(0, r + 1)] = sign * pt.x[i];
            for (c, &j) in s.iter().enumerate() {
                m[(r + 1, c + 1)] = pt.big_x[(i, j)];
            }
        }
        m
    };
    let zs: f64 = s.iter().map(|&i| pt.z[i]).sum();
    let mut out = vec![build(zs, -1.0)];
    if spec.side == Sidedness::TwoSided {
        out.push(build(k as f64 - zs, 1.0));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certainty {
    /// Exact sufficient or necessary condition held.
    Exact(String),
    /// Minimum of `vᵀMv` over the sampled simplex grid.
    Grid { resolution: usize, min_value: f64, points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CopositivityVerdict {
    Copositive(Certainty),
    Violated { witness: Vec<f64>, value: f64 },
}

impl CopositivityVerdict {
    pub fn is_copositive(&self) -> bool {
        matches!(self, CopositivityVerdict::Copositive(_))
    }
}

pub const GRID_POINT_CAP: u128 = 20_000_000;

fn binom128(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let k = v.len();
    let mut s = 0.0;
    for i in 0..k {
        if v[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..k {
            row += m[(i, j)] * v[j];
        }
        s += v[i] * row;
    }
    s
}

/// Visits every composition of `res` into `m` nonnegative parts.
fn for_each_composition(m: usize, res: usize, f: &mut impl FnMut(&[usize])) {
    let mut parts = vec![0usize; m];
    fn rec(idx: usize, left: usize, parts: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if idx + 1 == parts.len() {
            parts[idx] = left;
            f(parts);
            return;
        }
        for v in 0..=left {
            parts[idx] = v;
            rec(idx + 1, left - v, parts, f);
        }
    }
    if m > 0 {
        rec(0, res, &mut parts, f);
    }
}

/// Copositivity of a symmetric matrix, `vᵀMv ≥ −tol` for `v ≥ 0`.
///
/// Exact shortcuts run first: order 1 and 2 closed forms, entrywise
/// nonnegativity, and positive semidefiniteness. Otherwise the unit simplex
/// is sampled at `resolution` subdivisions plus coordinate vectors and
/// pairwise midpoints, and the smallest value found is reported.
pub fn grid_copositivity_check(m: &DMatrix<f64>, resolution: usize, tol: f64) -> Result<CopositivityVerdict, RelaxError> {
    let k = m.nrows();
    if m.ncols() != k {
        return Err(RelaxError::DimensionMismatch("matrix is not square".into()));
    }
    if resolution == 0 {
        return Err(RelaxError::BadParameter("resolution must be positive".into()));
    }
    let sym = 0.5 * (m + m.transpose());
    if k == 0 {
        return Ok(CopositivityVerdict::Copositive(Certainty::Exact("empty".into())));
    }
    let unit = |i: usize| {
        let mut v = vec![0.0; k];
        v[i] = 1.0;
        v
    };
    if let Some(i) = (0..k).find(|&i| sym[(i, i)] < -tol) {
        return Ok(CopositivityVerdict::Violated { witness: unit(i), value: sym[(i, i)] });
    }
    if k == 2 {
        let (a, b, c) = (sym[(0, 0)].max(0.0), sym[(0, 1)], sym[(1, 1)].max(0.0));
        if b + (a * c).sqrt() >= -tol {
            return Ok(CopositivityVerdict::Copositive(Certainty::Exact("2x2 criterion".into())));
        }
        // Minimiser of the quadratic on the segment, v ∝ (√c, √a).
        let (sa, sc) = (a.sqrt(), c.sqrt());
        let v = if sa + sc > 0.0 { vec![sc / (sa + sc), sa / (sa + sc)] } else { vec![0.5, 0.5] };
        let value = quad(&sym, &v);
        return Ok(CopositivityVerdict::Violated { witness: v, value });
    }
    if k == 1 || sym.iter().all(|&v| v >= -tol) {
        return Ok(CopositivityVerdict::Copositive(Certainty::Exact("entrywise nonnegative".into())));
    }
    if min_eigenvalue(&sym) >= -tol {
        return Ok(CopositivityVerdict::Copositive(Certainty::Exact("positive semidefinite".into())));
    }

    let points = binom128((resolution + k - 1) as u128, (k - 1) as u128);
    if points > GRID_POINT_CAP {
        return Err(RelaxError::TooLarge { points, cap: GRID_POINT_CAP });
    }
    let mut best = (f64::INFINITY, vec![0.0; k]);
    let consider = |v: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        let q = quad(&sym, &v);
        if q < best.0 {
            *best = (q, v);
        }
    };
    for i in 0..k {
        consider(unit(i), &mut best);
        for j in i + 1..k {
            let mut v = vec![0.0; k];
            v[i] = 0.5;
            v[j] = 0.5;
            consider(v, &mut best);
        }
    }
    let inv = 1.0 / resolution as f64;
    let mut count = 0usize;
    for_each_composition(k, resolution, &mut |parts| {
        count += 1;
        let v: Vec<f64> = parts.iter().map(|&p| p as f64 * inv).collect();
        consider(v, &mut best);
    });
    if best.0 < -tol {
        Ok(CopositivityVerdict::Violated { witness: best.1, value: best.0 })
    } else {
        Ok(CopositivityVerdict::Copositive(Certainty::Grid { resolution, min_value: best.0, points: count }))
    }
}

/// Worst-case drop of `vᵀMv` between a simplex point and its nearest grid
/// point at `resolution`.
pub fn grid_cell_tolerance(m: &DMatrix<f64>, resolution: usize) -> f64 {
    let k = m.nrows().max(2);
    let amax = m.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    2.0 * amax * 2.0 * (k - 1) as f64 / resolution as f64
}

/// Handles emitted by [`sdp_extension_for_subset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SdpExtension {
    pub g: Vec<Var>,
    pub h: Vec<Var>,
    pub bound_rows: usize,
    pub psd_blocks: Vec<usize>,
}

/// PSD extended form of the subset copositive inequalities:
/// `g ≥ x_S`, `[[Σz, −gᵀ], [−g, X_S]] ⪰ 0` and, two-sided only,
/// `h ≤ x_S`, `[[Σ(1 − z), hᵀ], [h, X_S]] ⪰ 0`.
///
/// `big_x[r][c]` holds the handle of `X_{S_r S_c}` (only `c ≤ r` is read).
pub fn sdp_extension_for_subset(
    spec: &SubsetConstraintSpec,
    b: &mut ProgramBuilder,
    x: &[Var],
    big_x: &[Vec<Var>],
    z: &[Var],
) -> Result<SdpExtension, RelaxError> {
    let k = spec.s.len();
    if x.len() != k || z.len() != k || big_x.len() != k || big_x.iter().enumerate().any(|(r, row)| row.len() <= r) {
        return Err(RelaxError::DimensionMismatch(format!("handles do not match |S| = {k}")));
    }
    for &v in x.iter().chain(z).chain(big_x.iter().flatten()) {
        b.check_var(v)?;
    }
    let lower_block = |corner: AffineExpr, off: &[Var], sign: f64| {
        let mut e = vec![vec![AffineExpr::new(); k + 1]; k + 1];
        e[0][0] = corner;
        for r in 0..k {
            e[r + 1][0] = AffineExpr::new().term(off[r], sign);
            for c in 0..=r {
                e[r + 1][c + 1] = AffineExpr::var(big_x[r][c]);
            }
        }
        e
    };
    let g = b.add_group(&format!("g{}", b.num_vars()), k);
    let mut rows: Vec<AffineExpr> = (0..k).map(|i| AffineExpr::var(g[i]).term(x[i], -1.0)).collect();
    let mut sum_z = AffineExpr::new();
    for &zi in z {
        sum_z.add_term(zi, 1.0);
    }
    let mut psd_blocks = Vec::new();
    let h = if spec.side == Sidedness::TwoSided {
        let h = b.add_group(&format!("h{}", b.num_vars()), k);
        rows.extend((0..k).map(|i| AffineExpr::var(x[i]).term(h[i], -1.0)));
        h
    } else {
        Vec::new()
    };
    let bound_rows = rows.len();
    b.add_nonneg(rows)?;
    psd_blocks.push(b.add_psd(&lower_block(sum_z.clone(), &g, -1.0))?);
    if spec.side == Sidedness::TwoSided {
        let comp = sum_z.scaled(-1.0).plus(k as f64);
        psd_blocks.push(b.add_psd(&lower_block(comp, &h, 1.0))?);
    }
    Ok(SdpExtension { g, h, bound_rows, psd_blocks })
}

/// Constructive `(g, h)` for a point of the integer set: `g = x_S` when
/// `Σ_S z ≥ 1`, else `0`; `h = x_S` when `Σ_S (1 − z) ≥ 1`, else `0`.
pub fn extension_witness(pt: &ExtendedPoint, spec: &SubsetConstraintSpec) -> (Vec<f64>, Vec<f64>) {
    let xs: Vec<f64> = spec.s.iter().map(|&i| pt.x[i]).collect();
    let zs: f64 = spec.s.iter().map(|&i| pt.z[i]).sum();
    let k = spec.s.len() as f64;
    let g = if zs >= 1.0 { xs.clone() } else { vec![0.0; xs.len()] };
    let h = if k - zs >= 1.0 { xs } else { vec![0.0; spec.s.len()] };
    (g, h)
}

/// Largest violation of the extended constraints at a given `(g, h)`:
/// bound violations and PSD distances of the blocks.
pub fn extension_violation(pt: &ExtendedPoint, spec: &SubsetConstraintSpec, g: &[f64], h: &[f64]) -> f64 {
    let s = &spec.s;
    let k = s.len();
    let zs: f64 = s.iter().map(|&i| pt.z[i]).sum();
    let block = |corner: f64, off: &[f64], sign: f64| {
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m[(0, 0)] = corner;
        for r in 0..k {
            m[(r + 1, 0)] = sign * off[r];
            m[(0, r + 1)] = sign * off[r];
            for c in 0..k {
                m[(r + 1, c + 1)] = pt.big_x[(s[r], s[c])];
            }
        }
        m
    };
    let mut worst = psd_distance(&block(zs, g, -1.0));
    for (r, &i) in s.iter().enumerate() {
        worst = worst.max(pt.x[i] - g[r]);
    }
    if spec.side == Sidedness::TwoSided {
        worst = worst.max(psd_distance(&block(k as f64 - zs, h, 1.0)));
        for (r, &i) in s.iter().enumerate() {
            worst = worst.max(h[r] - pt.x[i]);
        }
    }
    worst
}

/// Slack of `⟨ddᵀ, X⟩ ≥ RHS` for `d ≥ 0`, where RHS is the two-sided hull
/// expression restricted to `supp(d)`.
pub fn fixed_d_slack(d: &[f64], pt: &ExtendedPoint) -> Result<f64, RelaxError> {
    if d.iter().any(|&v| v < 0.0) {
        return Err(RelaxError::BadParameter("d must be nonnegative".into()));
    }
    let set = RankOneSet::two_sided(d.to_vec()).map_err(|e| RelaxError::BadParameter(e.to_string()))?;
    let rhs = hull::eval_hull_rhs(&set, &pt.x, &pt.z).map_err(|e| RelaxError::BadParameter(e.to_string()))?;
    let dv = nalgebra::DVector::from_column_slice(d);
    let lhs = (dv.transpose() * &pt.big_x * &dv)[(0, 0)];
    Ok(lhs - rhs)
}

pub const DEFAULT_BIG_M: f64 = 1000.0;

/// `min ‖w‖² (+ λΣz)` s.t. `y_i ã_iᵀw + M z_i ≥ 1`, `z ∈ {0,1}ⁿ`
/// (`Σ z ≤ k` in cardinality mode).
pub fn build_bigm_model(ds: &SvmDataset, big_m: f64, mode: SvmMode) -> Result<ConicProgram, RelaxError> {
    if !(big_m > 0.0 && big_m.is_finite()) {
        return Err(RelaxError::BadParameter(format!("M = {big_m}")));
    }
    let p = ds.p_tilde();
    let n = ds.n();
    let mut b = ProgramBuilder::new("bigm");
    b.provenance(format!("big-M model, M={big_m}, {mode:?}"));
    let w = b.add_group("w", p);
    let z = b.add_group("z", n);
    for &zi in &z {
        b.set_integer(zi);
        b.set_bounds(zi, 0.0, 1.0);
    }
    let rows: Vec<AffineExpr> = (0..n)
        .map(|i| {
            let mut r = AffineExpr::constant(-1.0);
            for (k, &a) in ds.signed_row(i).iter().enumerate() {
                if a != 0.0 {
                    r.add_term(w[k], a);
                }
            }
            r.add_term(z[i], big_m);
            r
        })
        .collect();
    if !rows.is_empty() {
        b.add_nonneg(rows)?;
    }
    for &wk in &w {
        b.add_quadratic(wk, wk, 1.0);
    }
    match mode {
        SvmMode::Penalty(l) => {
            for &zi in &z {
                b.add_objective(zi, l);
            }
        }
        SvmMode::Cardinality(k) => {
            let mut r = AffineExpr::constant(k.floor());
            for &zi in &z {
                r.add_term(zi, -1.0);
            }
            b.add_nonneg(vec![r])?;
        }
    }
    Ok(b.finish())
}

#[cfg(feature = "solver")]
pub use cp_sdp::{cp_sdp_equivalence_check, EquivalenceReport};

#[cfg(feature = "solver")]
mod cp_sdp {
    use super::*;
    use crate::conic::SolveStatus;
    use crate::solver::{solve, SolverConfig};

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct EquivalenceReport {
        pub copositive: bool,
        pub grid_min: f64,
        pub sdp_feasible: bool,
        /// Largest `s` with `[[t, yᵀ], [y, X]] − sI ⪰ 0`, `y ≤ x`.
        pub sdp_margin: f64,
        pub agree: bool,
        /// Grid drop allowance at this resolution.
        pub cell: f64,
    }

    /// Compares grid copositivity of `[[t, xᵀ], [x, X]]` with feasibility of
    /// `∃ y ≤ x : [[t, yᵀ], [y, X]] ⪰ 0`.
    pub fn cp_sdp_equivalence_check(
        t: f64,
        x: &[f64],
        big_x: &DMatrix<f64>,
        resolution: usize,
        cfg: &SolverConfig,
    ) -> Result<EquivalenceReport, RelaxError> {
        let k = x.len();
        if big_x.nrows() != k || big_x.ncols() != k {
            return Err(RelaxError::DimensionMismatch(format!("x has {k} entries, X is {}×{}", big_x.nrows(), big_x.ncols())));
        }
        if k + 1 > 4 {
            return Err(RelaxError::BadParameter(format!("order {} exceeds 4", k + 1)));
        }
        let lmin = min_eigenvalue(big_x);
        if lmin < -1e-9 {
            return Err(RelaxError::XNotPsd(lmin));
        }
        let mut full = DMatrix::zeros(k + 1, k + 1);
        full[(0, 0)] = t;
        for i in 0..k {
            full[(i + 1, 0)] = x[i];
            full[(0, i + 1)] = x[i];
            for j in 0..k {
                full[(i + 1, j + 1)] = big_x[(i, j)];
            }
        }
        let verdict = grid_copositivity_check(&full, resolution, 0.0)?;
        let grid_min = match &verdict {
            CopositivityVerdict::Violated { value, .. } => *value,
            CopositivityVerdict::Copositive(Certainty::Grid { min_value, .. }) => *min_value,
            CopositivityVerdict::Copositive(Certainty::Exact(_)) => 0.0,
        };

        let mut b = ProgramBuilder::new("cp-sdp");
        let y = b.add_group("y", k);
        let s = b.add_group("s", 1)[0];
        if k > 0 {
            b.add_nonneg((0..k).map(|i| AffineExpr::constant(x[i]).term(y[i], -1.0)).collect())?;
        }
        let mut e = vec![vec![AffineExpr::new(); k + 1]; k + 1];
        e[0][0] = AffineExpr::constant(t).term(s, -1.0);
        for i in 0..k {
            e[i + 1][0] = AffineExpr::var(y[i]);
            for j in 0..=i {
                e[i + 1][j + 1] = AffineExpr::constant(big_x[(i, j)]);
            }
            e[i + 1][i + 1].add_term(s, -1.0);
        }
        b.add_psd(&e)?;
        b.add_objective(s, -1.0);
        let sol = solve(&b.finish(), cfg).map_err(|e| RelaxError::Backend(e.to_string()))?;
        let margin = match sol.status {
            SolveStatus::Optimal | SolveStatus::NumericalFailure => sol.primal[k],
            other => return Err(RelaxError::Backend(format!("margin problem returned {other:?}"))),
        };
        let sdp_tol = 1e-7 * (1.0 + full.amax());
        let sdp_feasible = margin >= -sdp_tol;
        let copositive = verdict.is_copositive();
        let agree = copositive == sdp_feasible;
        let cell = grid_cell_tolerance(&full, resolution);
        if !agree && grid_min.abs() > cell && margin.abs() > sdp_tol {
            return Err(RelaxError::Disagreement { grid_min, cell });
        }
        Ok(EquivalenceReport { copositive, grid_min, sdp_feasible, sdp_margin: margin, agree, cell })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(k: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(k, k, v)
    }

    #[test]
    fn subset_matrix_examples() {
        let pt = ExtendedPoint { x: vec![0.0], big_x: mat(1, &[0.0]), z: vec![0.5] };
        let spec = SubsetConstraintSpec::new(vec![0], Sidedness::TwoSided, 1).unwrap();
        let ms = copositive_matrices_for_subset(&pt, &spec).unwrap();
        assert_eq!(ms, vec![mat(2, &[0.5, 0.0, 0.0, 0.0]), mat(2, &[0.5, 0.0, 0.0, 0.0])]);

        let pt = ExtendedPoint::lifted(vec![1.0, 1.0], vec![1.0, 1.0]);
        let spec = SubsetConstraintSpec::new(vec![0, 1], Sidedness::TwoSided, 2).unwrap();
        let ms = copositive_matrices_for_subset(&pt, &spec).unwrap();
        assert_eq!(ms[0], mat(3, &[2.0, -1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0]));
        assert!(grid_copositivity_check(&ms[0], 50, 1e-12).unwrap().is_copositive());

        let one = SubsetConstraintSpec::new(vec![1], Sidedness::OneSided, 2).unwrap();
        assert_eq!(copositive_matrices_for_subset(&pt, &one).unwrap().len(), 1);
    }

    #[test]
    fn grid_examples() {
        assert!(grid_copositivity_check(&mat(2, &[0.0, 1.0, 1.0, 0.0]), 10, 0.0).unwrap().is_copositive());
        match grid_copositivity_check(&mat(2, &[1.0, -2.0, -2.0, 1.0]), 10, 0.0).unwrap() {
            CopositivityVerdict::Violated { witness, value } => {
                assert!((witness[0] - 0.5).abs() < 1e-12 && (value + 0.5).abs() < 1e-12);
            }
            v => panic!("{v:?}"),
        }
        // Order 3, not PSD, not nonnegative: forces the grid path.
        let m = mat(3, &[1.0, -1.5, 0.0, -1.5, 1.0, 0.0, 0.0, 0.0, 1.0]);
        match grid_copositivity_check(&m, 20, 0.0).unwrap() {
            CopositivityVerdict::Violated { witness, value } => {
                assert!((value + 0.25).abs() < 1e-12, "{value}");
                assert!((witness[0] - 0.5).abs() < 1e-12);
            }
            v => panic!("{v:?}"),
        }
        // Copositive but neither PSD nor nonnegative (Horn-like).
        let h = mat(3, &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]);
        assert!(grid_copositivity_check(&h, 30, 1e-12).unwrap().is_copositive());
    }

    #[test]
    fn grid_rejects_huge_grids() {
        let m = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { -0.1 * (i + j) as f64 });
        assert!(matches!(grid_copositivity_check(&m, 1000, 0.0), Err(RelaxError::TooLarge { .. })));
    }

    #[test]
    fn sdp_extension_structure() {
        let mut b = ProgramBuilder::new("ext");
        let x = b.add_group("x", 1);
        let xx = b.add_group("X", 1);
        let z = b.add_group("z", 1);
        let spec = SubsetConstraintSpec::new(vec![0], Sidedness::TwoSided, 1).unwrap();
        let ext = sdp_extension_for_subset(&spec, &mut b, &x, std::slice::from_ref(&xx), &z).unwrap();
        assert_eq!(ext.g.len() + ext.h.len(), 2);
        assert_eq!(ext.bound_rows, 2);
        let p = b.finish();
        assert_eq!(p.cone_census()["psd"], 2);
        assert!(crate::conic::validate(&p).is_empty());
    }

    #[test]
    fn witnesses_for_integer_points() {
        let spec = SubsetConstraintSpec::new(vec![0, 1], Sidedness::TwoSided, 3).unwrap();
        let pt = ExtendedPoint::lifted(vec![2.0, -1.0, 0.5], vec![1.0, 0.0, 1.0]);
        let (g, h) = extension_witness(&pt, &spec);
        assert_eq!(g, vec![2.0, -1.0]);
        assert!(extension_violation(&pt, &spec, &g, &h) < 1e-12);
        let pt0 = ExtendedPoint::lifted(vec![-1.0, -3.0, 0.0], vec![0.0, 0.0, 1.0]);
        let (g, h) = extension_witness(&pt0, &spec);
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(extension_violation(&pt0, &spec, &g, &h) < 1e-12);
    }

    #[test]
    fn bigm_structure() {
        let ds = SvmDataset::new(vec![vec![1.0], vec![-1.0]], vec![1.0, -1.0], true).unwrap();
        let p = build_bigm_model(&ds, DEFAULT_BIG_M, SvmMode::Penalty(1.0)).unwrap();
        assert_eq!(p.integer.iter().filter(|&&b| b).count(), 2);
        assert_eq!(p.num_rows(), 2);
        let text = crate::conic::export_mps(&p).unwrap();
        assert!(text.contains(" z0 R0 1000\n"));
    }
}
