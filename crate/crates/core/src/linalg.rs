//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, SymmetricEigen};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Number of entries in the lower triangle of a symmetric matrix of `order`.
pub fn triangle_len(order: usize) -> usize {
    order * (order + 1) / 2
}

/// Position of entry `(row, col)` (with `row ≥ col`) in the packed lower
/// triangle, row-major: `(0,0), (1,0), (1,1), (2,0), ...`.
pub fn triangle_index(row: usize, col: usize) -> usize {
    debug_assert!(row >= col);
    row * (row + 1) / 2 + col
}

/// Inverse of [`triangle_len`]; `None` when `len` is not triangular.
pub fn triangle_order(len: usize) -> Option<usize> {
    let mut k = 0;
    while triangle_len(k) < len {
        k += 1;
    }
    (triangle_len(k) == len).then_some(k)
}

/// Packs a symmetric matrix into the scaled lower triangle (off-diagonals
/// multiplied by √2) so that `⟨A, B⟩ = svec(A)·svec(B)`.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = vec![0.0; triangle_len(k)];
    for i in 0..k {
        for j in 0..=i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[triangle_index(i, j)] = if i == j { v } else { v * SQRT_2 };
        }
    }
    out
}

/// Unpacks a scaled lower triangle into a full symmetric matrix.
pub fn smat(v: &[f64], order: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(order, order);
    for i in 0..order {
        for j in 0..=i {
            let x = v[triangle_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT_2;
                m[(j, i)] = x / SQRT_2;
            }
        }
    }
    m
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let sym = 0.5 * (m + m.transpose());
    SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Frobenius distance from a symmetric matrix to the PSD cone.
pub fn psd_distance(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .into_iter()
        .filter(|&l| l < 0.0)
        .map(|l| l * l)
        .sum::<f64>()
        .sqrt()
}

/// Factor `L` with `m = L Lᵀ` for a PSD matrix; tiny negative eigenvalues
/// are clipped to zero. Columns of `L` are scaled eigenvectors.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut l = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for i in 0..k {
            l[(i, j)] *= s;
        }
    }
    l
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance from `(t, x)` to the second-order cone `t ≥ ‖x‖`.
pub fn soc_distance(t: f64, x: &[f64]) -> f64 {
    let nx = norm2(x);
    if nx <= t {
        0.0
    } else if nx <= -t {
        (t * t + nx * nx).sqrt()
    } else {
        let a = 0.5 * (t + nx);
        let dt = t - a;
        let dx2: f64 = x.iter().map(|&xi| (xi - a * xi / nx).powi(2)).sum();
        (dt * dt + dx2).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svec_roundtrip_and_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, -1.0, 1.0, 3.0, 0.5, -1.0, 0.5, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, -2.0, 0.0, -2.0, 1.0, 4.0, 0.0, 4.0, 2.0]);
        let inner: f64 = a.component_mul(&b).sum();
        assert!((dot(&svec(&a), &svec(&b)) - inner).abs() < 1e-12);
        assert!((smat(&svec(&a), 3) - &a).norm() < 1e-12);
        assert_eq!(triangle_order(6), Some(3));
        assert_eq!(triangle_order(5), None);
    }

    #[test]
    fn psd_distance_single_negative_eigenvalue() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!((psd_distance(&m) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn soc_distance_cases() {
        assert_eq!(soc_distance(2.0, &[1.0, 1.0]), 0.0);
        assert!((soc_distance(-1.0, &[0.0]) - 1.0).abs() < 1e-12);
        // (0, 1) projects to (0.5, 0.5)
        assert!((soc_distance(0.0, &[1.0]) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn factor_reproduces_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let l = psd_factor(&m);
        assert!((&l * l.transpose() - m).norm() < 1e-12);
    }
}
