//! Symmetric eigendecomposition with a deterministic output convention.
//!
//! Every eigensolve in the crate goes through [`symmetric_eigen`], which
//! returns eigenvalues in ascending order (stable with respect to the
//! solver's original column order) and eigenvectors whose largest-magnitude
//! entry is positive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;
const ORTHONORMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: DVector<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: DMatrix<f64>,
}

pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<EigenPairs> {
    if !matrix.is_square() {
        return Err(Error::dims(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let n = matrix.nrows();
    let sym = symmetrized(matrix);
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, MAX_SWEEPS).ok_or_else(|| {
        Error::numerical(format!(
            "symmetric eigensolver did not converge ({}x{}, {})",
            n,
            n,
            condition_report(&sym)
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    if orthonormality_error(&vectors) >= ORTHONORMALITY_TOL {
        reorthonormalize(&mut vectors);
    }
    canonicalize_signs(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// `(m + mᵀ) / 2`, exactly symmetric.
pub fn symmetrized(matrix: &DMatrix<f64>) -> DMatrix<f64> {
    let n = matrix.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (matrix[(i, j)] + matrix[(j, i)]))
}

/// Flip each column so that its largest-magnitude entry is positive.
/// Ties go to the first such entry.
pub fn canonicalize_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// `‖VᵀV − I‖∞` (max-abs entry).
pub fn orthonormality_error(vectors: &DMatrix<f64>) -> f64 {
    let gram = vectors.tr_mul(vectors);
    max_abs_diff_from_identity(&gram)
}

pub fn max_abs_diff_from_identity(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

// Two passes of modified Gram-Schmidt.
fn reorthonormalize(vectors: &mut DMatrix<f64>) {
    let n = vectors.ncols();
    for _ in 0..2 {
        for j in 0..n {
            for k in 0..j {
                let proj = vectors.column(k).dot(&vectors.column(j));
                let prev = vectors.column(k).clone_owned();
                vectors.column_mut(j).axpy(-proj, &prev, 1.0);
            }
            let norm = vectors.column(j).norm();
            if norm > 0.0 {
                vectors.column_mut(j).unscale_mut(norm);
            }
        }
    }
}

fn condition_report(m: &DMatrix<f64>) -> String {
    let frob = m.norm();
    let max_diag = m.diagonal().iter().fold(f64::MIN, |a, &b| a.max(b));
    let min_diag = m.diagonal().iter().fold(f64::MAX, |a, &b| a.min(b));
    format!("frobenius norm {frob:e}, diagonal range [{min_diag:e}, {max_diag:e}]")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascending_with_positive_dominant_entries() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let eig = symmetric_eigen(&m).unwrap();
        assert!(eig.values[0] <= eig.values[1] && eig.values[1] <= eig.values[2]);
        for col in eig.vectors.column_iter() {
            let dominant = col
                .iter()
                .cloned()
                .fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
            assert!(dominant > 0.0);
        }
        assert!(orthonormality_error(&eig.vectors) < 1e-12);
        let recon = &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        assert!((recon - m).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_non_square() {
        assert!(symmetric_eigen(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sign_tie_goes_to_first_entry() {
        let mut v = DMatrix::from_column_slice(2, 1, &[-0.5, 0.5]);
        canonicalize_signs(&mut v);
        assert_eq!(v[(0, 0)], 0.5);
        assert_eq!(v[(1, 0)], -0.5);
    }
}
