use nalgebra::DMatrix;

use super::{SubsetCollection, SvmDataset, SvmError, SvmMode};
use crate::conic::{AffineExpr, ConicProgram, ProgramBuilder, Var};
use crate::linalg::{max_eigenvalue, min_eigenvalue, psd_factor, triangle_index, triangle_len};

/// Variable handles of a conic relaxation.
#[derive(Debug, Clone)]
pub struct ConicLayout {
    pub w: Vec<Var>,
    /// Lower triangle of `W`, row-major.
    pub big_w: Vec<Var>,
    pub z: Vec<Var>,
    /// One handle vector per subset, in collection order.
    pub g: Vec<Vec<Var>>,
}

impl ConicLayout {
    pub fn w_entry(&self, i: usize, j: usize) -> Var {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.big_w[triangle_index(r, c)]
    }
}

fn check_mode(mode: SvmMode) -> Result<(), SvmError> {
    match mode {
        SvmMode::Penalty(l) if l >= 0.0 && l.is_finite() => Ok(()),
        SvmMode::Cardinality(k) if k >= 0.0 && k.is_finite() => Ok(()),
        m => Err(SvmError::BadParameter(format!("{m:?}"))),
    }
}

fn add_unit_box(b: &mut ProgramBuilder, z: &[Var]) -> Result<(), SvmError> {
    let mut rows = Vec::with_capacity(2 * z.len());
    for &zi in z {
        rows.push(AffineExpr::var(zi));
        rows.push(AffineExpr::constant(1.0).term(zi, -1.0));
    }
    if !rows.is_empty() {
        b.add_nonneg(rows)?;
    }
    Ok(())
}

fn add_mode(b: &mut ProgramBuilder, z: &[Var], mode: SvmMode) -> Result<(), SvmError> {
    match mode {
        SvmMode::Penalty(l) => {
            for &zi in z {
                b.add_objective(zi, l);
            }
        }
        SvmMode::Cardinality(k) => {
            let mut row = AffineExpr::constant(k);
            for &zi in z {
                row.add_term(zi, -1.0);
            }
            b.add_nonneg(vec![row])?;
        }
    }
    Ok(())
}

fn mode_tag(mode: SvmMode) -> String {
    match mode {
        SvmMode::Penalty(l) => format!("penalty lambda={l}"),
        SvmMode::Cardinality(k) => format!("cardinality k={k}"),
    }
}

/// `a_iᵀ w` as an affine expression.
fn linear(a: &[f64], w: &[Var]) -> AffineExpr {
    let mut e = AffineExpr::new();
    for (&ak, &wk) in a.iter().zip(w) {
        if ak != 0.0 {
            e.add_term(wk, ak);
        }
    }
    e
}

/// Conic relaxation over a subset collection: objective `tr(W)` plus the
/// mode term, one PSD block of order `|L| + 1` per subset, and
/// `[[1, wᵀ], [w, W]] ⪰ 0`.
pub fn build_conic_relaxation(
    ds: &SvmDataset,
    subsets: &SubsetCollection,
    mode: SvmMode,
) -> Result<(ConicProgram, ConicLayout), SvmError> {
    if ds.n() == 0 {
        return Err(SvmError::Empty);
    }
    check_mode(mode)?;
    SubsetCollection::custom(ds.n(), subsets.subsets.clone())?;
    let p = ds.p_tilde();
    let a = ds.signed_rows();

    let mut b = ProgramBuilder::new(format!("conic-{}", subsets.generator));
    b.provenance(format!("conic relaxation, {} subsets, {}", subsets.len(), mode_tag(mode)));
    let w = b.add_group("w", p);
    let big_w = b.add_group("W", triangle_len(p));
    let z = b.add_group("z", ds.n());
    let total_g: usize = subsets.subsets.iter().map(Vec::len).sum();
    let g_all = b.add_group("g", total_g);
    let mut g = Vec::with_capacity(subsets.len());
    let mut off = 0;
    for s in &subsets.subsets {
        g.push(g_all[off..off + s.len()].to_vec());
        off += s.len();
    }
    let layout = ConicLayout { w, big_w, z, g };

    add_unit_box(&mut b, &layout.z)?;
    // g^L ≥ 1 − A_L w
    let mut rows = Vec::with_capacity(total_g);
    for (s, gs) in subsets.subsets.iter().zip(&layout.g) {
        for (&i, &gi) in s.iter().zip(gs) {
            let mut r = linear(&a[i], &layout.w);
            r.add_term(gi, 1.0);
            r.constant = -1.0;
            rows.push(r);
        }
    }
    b.add_nonneg(rows)?;

    for (s, gs) in subsets.subsets.iter().zip(&layout.g) {
        let m = s.len() + 1;
        let mut entries = vec![vec![AffineExpr::new(); m]; m];
        for &i in s {
            entries[0][0].add_term(layout.z[i], 1.0);
        }
        for (r, &gi) in gs.iter().enumerate() {
            entries[r + 1][0] = AffineExpr::new().term(gi, -1.0);
        }
        for (r, &i) in s.iter().enumerate() {
            for (c, &j) in s.iter().enumerate().take(r + 1) {
                // 1 − a_iᵀw − a_jᵀw + a_iᵀ W a_j
                let mut e = AffineExpr::constant(1.0);
                e.add_expr(&linear(&a[i], &layout.w), -1.0);
                e.add_expr(&linear(&a[j], &layout.w), -1.0);
                for k in 0..p {
                    for l in 0..=k {
                        let coef = if k == l { a[i][k] * a[j][k] } else { a[i][k] * a[j][l] + a[i][l] * a[j][k] };
                        if coef != 0.0 {
                            e.add_term(layout.w_entry(k, l), coef);
                        }
                    }
                }
                entries[r + 1][c + 1] = e;
            }
        }
        b.add_psd(&entries)?;
    }

    let mut entries = vec![vec![AffineExpr::new(); p + 1]; p + 1];
    entries[0][0] = AffineExpr::constant(1.0);
    for k in 0..p {
        entries[k + 1][0] = AffineExpr::var(layout.w[k]);
        for l in 0..=k {
            entries[k + 1][l + 1] = AffineExpr::var(layout.w_entry(k, l));
        }
    }
    b.add_psd(&entries)?;

    for k in 0..p {
        b.add_objective(layout.w_entry(k, k), 1.0);
    }
    add_mode(&mut b, &layout.z, mode)?;
    Ok((b.finish(), layout))
}

/// `min ‖w‖² + λ Σ max(0, 1 − y_i ã_iᵀw)` via an epigraph `τ ≥ ‖w‖²`.
pub fn build_hinge(ds: &SvmDataset, lambda: f64) -> Result<ConicProgram, SvmError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SvmError::BadParameter(format!("lambda = {lambda}")));
    }
    let p = ds.p_tilde();
    let mut b = ProgramBuilder::new("hinge");
    b.provenance(format!("hinge loss, lambda={lambda}"));
    let w = b.add_group("w", p);
    let tau = b.add_group("tau", 1)[0];
    let xi = b.add_group("xi", ds.n());
    b.add_rotated(AffineExpr::var(tau), AffineExpr::constant(0.5), w.iter().map(|&v| AffineExpr::var(v)).collect())?;
    let mut rows = Vec::with_capacity(2 * ds.n());
    for (i, &x) in xi.iter().enumerate() {
        rows.push(AffineExpr::var(x));
        let mut r = linear(&ds.signed_row(i), &w);
        r.add_term(x, 1.0);
        r.constant = -1.0;
        rows.push(r);
    }
    if !rows.is_empty() {
        b.add_nonneg(rows)?;
    }
    b.add_objective(tau, 1.0);
    for &x in &xi {
        b.add_objective(x, lambda);
    }
    Ok(b.finish())
}

/// `min Σ ξ_i` s.t. `y_i ã_iᵀw − λ‖w‖₁ ≥ 1 − ξ_i`, `ξ ≥ 0`, with
/// `w = w_pos − w_neg`.
pub fn build_robust_l1(ds: &SvmDataset, lambda: f64) -> Result<ConicProgram, SvmError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(SvmError::BadParameter(format!("lambda = {lambda}")));
    }
    let p = ds.p_tilde();
    let mut b = ProgramBuilder::new("robust-l1");
    b.provenance(format!("l1-robust classifier, lambda={lambda}"));
    let wp = b.add_group("w_pos", p);
    let wm = b.add_group("w_neg", p);
    let xi = b.add_group("xi", ds.n());
    let mut rows: Vec<AffineExpr> = wp.iter().chain(&wm).chain(&xi).map(|&v| AffineExpr::var(v)).collect();
    for (i, &x) in xi.iter().enumerate() {
        let a = ds.signed_row(i);
        let mut r = AffineExpr::constant(-1.0);
        for k in 0..p {
            r.add_term(wp[k], a[k] - lambda);
            r.add_term(wm[k], -a[k] - lambda);
        }
        r.add_term(x, 1.0);
        rows.push(r);
    }
    b.add_nonneg(rows)?;
    for &x in &xi {
        b.add_objective(x, 1.0);
    }
    Ok(b.finish())
}

/// `d_i = 1 / λ_max(AᵀA)` for every point, which keeps `I − AᵀDA ⪰ 0`.
pub fn default_decomposition_d(ds: &SvmDataset) -> Vec<f64> {
    let a = ds.signed_matrix();
    let lmax = max_eigenvalue(&(a.transpose() * &a));
    let d = if lmax > 0.0 { 1.0 / lmax } else { 1.0 };
    vec![d; ds.n()]
}

/// Per-point rank-one decomposition:
/// `wᵀ(I − AᵀDA)w + 2(AᵀD1)ᵀw − Σd + Σ d_i (s_i + q_i)` plus the mode term,
/// with `u_i + v_i = 1 − a_iᵀw`, `u ≥ 0 ≥ v`, `s_i z_i ≥ u_i²`, `q_i ≥ v_i²`.
pub fn build_decomposition_relaxation(
    ds: &SvmDataset,
    dvec: &[f64],
    mode: SvmMode,
) -> Result<ConicProgram, SvmError> {
    let n = ds.n();
    if n == 0 {
        return Err(SvmError::Empty);
    }
    check_mode(mode)?;
    if dvec.len() != n || dvec.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
        return Err(SvmError::BadParameter("dvec must be nonnegative with one entry per point".into()));
    }
    let p = ds.p_tilde();
    let a = ds.signed_matrix();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(dvec));
    let m = DMatrix::identity(p, p) - a.transpose() * &d * &a;
    let lmin = min_eigenvalue(&m);
    if lmin < -1e-9 {
        return Err(SvmError::InvalidDecomposition(lmin));
    }
    let l = psd_factor(&m);
    let ad1 = a.transpose() * nalgebra::DVector::from_column_slice(dvec);

    let mut b = ProgramBuilder::new("decomposition");
    b.provenance(format!("per-point rank-one decomposition, {}", mode_tag(mode)));
    let w = b.add_group("w", p);
    let z = b.add_group("z", n);
    let u = b.add_group("u", n);
    let v = b.add_group("v", n);
    let s = b.add_group("s", n);
    let q = b.add_group("q", n);
    let tau = b.add_group("tau", 1)[0];

    add_unit_box(&mut b, &z)?;
    // τ ≥ ‖Lᵀw‖²
    let lw: Vec<AffineExpr> = (0..p)
        .map(|c| {
            let mut e = AffineExpr::new();
            for r in 0..p {
                if l[(r, c)] != 0.0 {
                    e.add_term(w[r], l[(r, c)]);
                }
            }
            e
        })
        .collect();
    b.add_rotated(AffineExpr::var(tau), AffineExpr::constant(0.5), lw)?;

    let rows_a = ds.signed_rows();
    let mut eq = Vec::with_capacity(n);
    let mut sign = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut r = linear(&rows_a[i], &w);
        r.add_term(u[i], 1.0);
        r.add_term(v[i], 1.0);
        r.constant = -1.0;
        eq.push(r);
        sign.push(AffineExpr::var(u[i]));
        sign.push(AffineExpr::new().term(v[i], -1.0));
    }
    b.add_zero(eq)?;
    b.add_nonneg(sign)?;
    for i in 0..n {
        b.add_rotated(AffineExpr::var(s[i]), AffineExpr::new().term(z[i], 0.5), vec![AffineExpr::var(u[i])])?;
        b.add_rotated(AffineExpr::var(q[i]), AffineExpr::constant(0.5), vec![AffineExpr::var(v[i])])?;
    }

    b.add_objective(tau, 1.0);
    for k in 0..p {
        b.add_objective(w[k], 2.0 * ad1[k]);
    }
    b.add_objective_constant(-dvec.iter().sum::<f64>());
    for i in 0..n {
        if dvec[i] != 0.0 {
            b.add_objective(s[i], dvec[i]);
            b.add_objective(q[i], dvec[i]);
        }
    }
    add_mode(&mut b, &z, mode)?;
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::validate;

    fn ds3() -> SvmDataset {
        SvmDataset::new(vec![vec![1.0], vec![-1.0], vec![0.5]], vec![1.0, -1.0, 1.0], true).unwrap()
    }

    #[test]
    fn conic1_structure() {
        let ds = ds3();
        let (p, lay) = build_conic_relaxation(&ds, &SubsetCollection::singletons(3), SvmMode::Penalty(1.0)).unwrap();
        assert!(validate(&p).is_empty());
        let psd: Vec<_> = p
            .constraints
            .iter()
            .filter_map(|c| match c.cone {
                crate::conic::Cone::PsdTriangle(m) => Some(m),
                _ => None,
            })
            .collect();
        assert_eq!(psd, vec![2, 2, 2, 3]);
        assert_eq!(lay.g.iter().map(Vec::len).sum::<usize>(), 3);
    }

    #[test]
    fn integer_points_satisfy_conic_relaxation() {
        // w separates points 0 and 1 with margin; point 2 is flagged (z = 1).
        let ds = SvmDataset::new(
            vec![vec![1.0], vec![-1.0], vec![-0.5]],
            vec![1.0, -1.0, 1.0],
            true,
        )
        .unwrap();
        let (p, lay) = build_conic_relaxation(&ds, &subsets_all(3), SvmMode::Cardinality(1.0)).unwrap();
        let w = [0.0, 1.5];
        let zbar = [0.0, 0.0, 1.0];
        let mut v = vec![0.0; p.num_vars];
        for k in 0..2 {
            v[lay.w[k].0] = w[k];
            for l in 0..=k {
                v[lay.w_entry(k, l).0] = w[k] * w[l];
            }
        }
        for i in 0..3 {
            v[lay.z[i].0] = zbar[i];
        }
        let a = ds.signed_rows();
        for (s, gs) in subsets_all(3).subsets.iter().zip(&lay.g) {
            let any = s.iter().any(|&i| zbar[i] == 1.0);
            for (&i, &gi) in s.iter().zip(gs) {
                let x = 1.0 - a[i][0] * w[0] - a[i][1] * w[1];
                v[gi.0] = if any { x } else { 0.0 };
            }
        }
        for c in &p.constraints {
            let vals: Vec<f64> = c.rows.iter().map(|r| r.eval(&v)).collect();
            assert!(crate::conic::cone_distance(c.cone, &vals) < 1e-8, "{:?} {vals:?}", c.cone);
        }
    }

    fn subsets_all(n: usize) -> SubsetCollection {
        crate::svm::subsets_up_to(n, 2, 100).unwrap()
    }

    #[test]
    fn robust_l1_structure() {
        let ds = SvmDataset::new(vec![vec![1.0], vec![2.0]], vec![1.0, -1.0], true).unwrap();
        let p = build_robust_l1(&ds, 0.1).unwrap();
        assert_eq!(p.meta.group("xi").unwrap().len(), 2);
        assert_eq!(p.meta.group("w_pos").unwrap().len() + p.meta.group("w_neg").unwrap().len(), 4);
    }

    #[test]
    fn decomposition_rejects_large_d() {
        let ds = ds3();
        let err = build_decomposition_relaxation(&ds, &[10.0; 3], SvmMode::Penalty(1.0)).unwrap_err();
        assert!(matches!(err, SvmError::InvalidDecomposition(_)));
        let d = default_decomposition_d(&ds);
        assert!(build_decomposition_relaxation(&ds, &d, SvmMode::Penalty(1.0)).is_ok());
    }
}
