use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::matrix_core::Matrix;

/// Symmetric eigendecomposition with eigenvalues sorted descending; column `k`
/// of the returned matrix is the eigenvector of `values[k]`.
pub(crate) fn sym_eigen_desc(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("non-finite input".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Nearest orthogonal matrix (orthogonal polar factor) via SVD.
pub(crate) fn nearest_orthogonal(a: &Matrix) -> Result<Matrix> {
    let svd = a.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::Decomposition("SVD failed".into())),
    }
}

/// Orthogonal `k x k` matrix whose first column is the unit vector along `w`
/// (Householder reflector; identity when `w` is already along `e_1`).
pub(crate) fn reflector_to_first_axis(w: &DVector<f64>) -> Matrix {
    let k = w.len();
    let norm = w.norm();
    let mut target = DVector::zeros(k);
    target[0] = norm;
    let d = w - &target;
    let dd = d.norm_squared();
    if norm == 0.0 || dd <= f64::EPSILON * f64::EPSILON * norm * norm {
        return Matrix::identity(k, k);
    }
    Matrix::identity(k, k) - (&d * d.transpose()) * (2.0 / dd)
}

/// Extends orthonormal columns `basis` (n x k) to a full orthogonal n x n
/// matrix by Gram-Schmidt against the standard basis.
pub(crate) fn complete_orthonormal(basis: &Matrix) -> Matrix {
    let n = basis.nrows();
    let mut cols: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dot(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    Matrix::from_columns(&cols)
}
