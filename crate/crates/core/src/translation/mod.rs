//! Reduction of the symmetric commutator inequality to a quadratic form on
//! the simplex.
//!
//! A symmetric tuple is written as `(B_1, ..., B_m) = (E_1, ..., E_N) B` over
//! the orthonormal basis of `SM(n)` (`N = n(n+1)/2`, pairs `(i, j)`, `i <= j`,
//! in lexicographic order). Diagonalizing `B B^t = Q diag(x) Q^t` turns both
//! sides of the inequality into functions of `(Q, x)`:
//!
//! ```text
//! sum_r ||B_r||^2          = sum_a x_a
//! sum_{r,s} ||[B_r,B_s]||^2 = sum_{a,b} x_a x_b ||[Q_a, Q_b]||^2
//! ```
//!
//! so the inequality reads `f_Q(x) <= 0` on the nonnegative orthant.

mod simplex;

pub use simplex::{
    g_epsilon_member, simplex_max, Membership, SimplexConfig, SimplexMax, SimplexMethod,
    SimplexRegion,
};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::matrix_core::{
    bracket, comm_norm_sum, norm_sum, orthogonality_defect, Matrix, MatrixTuple, SymmetryClass,
    TOL_ORTH,
};

/// Orthonormal basis `{E_(i,j)}` of the symmetric `n x n` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBasis {
    n: usize,
    elements: Vec<Matrix>,
    index_map: Vec<(usize, usize)>,
}

impl SymBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `N = n(n+1)/2`.
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    /// Zero-based `(i, j)` pair of basis index `alpha`.
    pub fn pair(&self, alpha: usize) -> (usize, usize) {
        self.index_map[alpha]
    }

    /// Zero-based basis index of the pair `(i, j)` (either order).
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if j >= self.n {
            return None;
        }
        // rows 0..i contribute n, n-1, ..., n-i+1 entries
        Some(i * self.n - i * (i.saturating_sub(1)) / 2 + (j - i))
    }

    /// The basis for `SM(n)` whose dimension is `dim`, if `dim` is triangular.
    pub fn for_dim(dim: usize) -> Result<Self> {
        let n = ((((8 * dim + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
        if n == 0 || n * (n + 1) / 2 != dim {
            return Err(Error::Dimension(format!(
                "{dim} is not n(n+1)/2 for any n >= 1"
            )));
        }
        sym_basis(n)
    }
}

pub fn sym_basis(n: usize) -> Result<SymBasis> {
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    let mut elements = Vec::with_capacity(n * (n + 1) / 2);
    let mut index_map = Vec::with_capacity(n * (n + 1) / 2);
    let off = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i..n {
            let mut e = Matrix::zeros(n, n);
            if i == j {
                e[(i, i)] = 1.0;
            } else {
                e[(i, j)] = off;
                e[(j, i)] = off;
            }
            elements.push(e);
            index_map.push((i, j));
        }
    }
    Ok(SymBasis {
        n,
        elements,
        index_map,
    })
}

/// Coefficients `B` (N x m) of a symmetric tuple over a [`SymBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vectorization {
    pub basis: SymBasis,
    pub coeffs: Matrix,
}

impl Vectorization {
    /// `(E_1, ..., E_N) B`.
    pub fn reconstruct(&self) -> MatrixTuple {
        let mats = crate::matrix_core::recombine(self.basis.elements(), &self.coeffs);
        MatrixTuple::from_parts(SymmetryClass::Symmetric, mats)
    }

    pub fn gram(&self) -> Matrix {
        &self.coeffs * self.coeffs.transpose()
    }
}

pub fn vectorize(t: &MatrixTuple) -> Result<Vectorization> {
    if t.symmetry() != SymmetryClass::Symmetric {
        return Err(Error::Domain("vectorization needs a symmetric tuple".into()));
    }
    let basis = sym_basis(t.n())?;
    let coeffs = Matrix::from_fn(basis.dim(), t.m(), |alpha, r| {
        t.mats()[r].dot(&basis.elements[alpha])
    });
    Ok(Vectorization { basis, coeffs })
}

/// `B B^t = Q diag(x) Q^t` with `Q` special orthogonal and `x >= 0` sorted
/// descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub q: Matrix,
    pub x: Vec<f64>,
}

pub fn spectral_frame(v: &Vectorization) -> Result<SpectralFrame> {
    let gram = v.gram();
    let dim = gram.nrows();
    if gram.iter().any(|e| !e.is_finite()) {
        return Err(Error::Decomposition("non-finite Gram matrix".into()));
    }
    if gram.iter().all(|&e| e == 0.0) {
        return Ok(SpectralFrame {
            q: Matrix::identity(dim, dim),
            x: vec![0.0; dim],
        });
    }
    let (values, mut q) = sym_eigen_desc(&gram)?;
    let floor = -1e-12 * gram.trace().max(1.0);
    let mut x = Vec::with_capacity(dim);
    for (k, &val) in values.iter().enumerate() {
        if val < floor {
            return Err(Error::Decomposition(format!(
                "Gram eigenvalue {k} is {val:e}, expected >= 0"
            )));
        }
        x.push(val.max(0.0));
    }
    if q.determinant() < 0.0 {
        q.column_mut(dim - 1).neg_mut();
    }
    Ok(SpectralFrame { q, x })
}

/// `(Q_1, ..., Q_N) = (E_1, ..., E_N) Q`.
pub fn frame_matrices(q: &Matrix, basis: &SymBasis) -> Result<Vec<Matrix>> {
    if q.nrows() != basis.dim() || q.ncols() != basis.dim() {
        return Err(Error::Dimension(format!(
            "Q is {}x{}, basis has N = {}",
            q.nrows(),
            q.ncols(),
            basis.dim()
        )));
    }
    let deviation = orthogonality_defect(q);
    if deviation.is_nan() || deviation > TOL_ORTH {
        return Err(Error::NotOrthogonal {
            which: "Q",
            deviation,
        });
    }
    Ok(crate::matrix_core::recombine(basis.elements(), q))
}

/// The quadratic form `f_Q(x) = sum_{a,b} x_a x_b C_ab - (sum_a x_a)^2` with
/// cached coefficients `C_ab = ||[Q_a, Q_b]||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorForm {
    coeffs: Matrix,
}

impl CommutatorForm {
    pub fn new(q: &Matrix, basis: &SymBasis) -> Result<Self> {
        let frames = frame_matrices(q, basis)?;
        let dim = frames.len();
        let mut coeffs = Matrix::zeros(dim, dim);
        for a in 0..dim {
            for b in (a + 1)..dim {
                let c = bracket(&frames[a], &frames[b]).norm_squared();
                coeffs[(a, b)] = c;
                coeffs[(b, a)] = c;
            }
        }
        Ok(Self { coeffs })
    }

    /// Form for `Q` of size `N x N`, with the basis of `SM(n)` inferred from `N`.
    pub fn from_rotation(q: &Matrix) -> Result<Self> {
        Self::new(q, &SymBasis::for_dim(q.nrows())?)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    /// The coefficient matrix `C`.
    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point has wrong dimension");
        let xv = DVector::from_column_slice(x);
        let sum: f64 = x.iter().sum();
        xv.dot(&(&self.coeffs * &xv)) - sum * sum
    }

    /// `x^t C x`, the bracket part of the form.
    pub(crate) fn quadratic(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.coeffs * x))
    }
}

pub fn f_eval(q: &Matrix, x: &[f64], basis: &SymBasis) -> Result<f64> {
    let form = CommutatorForm::new(q, basis)?;
    if x.len() != form.dim() {
        return Err(Error::Dimension(format!(
            "x has length {}, expected {}",
            x.len(),
            form.dim()
        )));
    }
    Ok(form.eval(x))
}

/// Absolute residuals of the two identities behind the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationResiduals {
    /// `|sum_r ||B_r||^2 - sum_a x_a|`.
    pub norm: f64,
    /// `|sum_{r,s} ||[B_r,B_s]||^2 - sum_{a,b} x_a x_b C_ab|`.
    pub commutator: f64,
}

/// Full pipeline output for one symmetric tuple.
#[derive(Debug, Clone)]
pub struct Translation {
    pub vectorization: Vectorization,
    pub frame: SpectralFrame,
    pub form: CommutatorForm,
    pub residuals: TranslationResiduals,
    /// `f_Q(x)` at the spectrum `x`.
    pub f_value: f64,
}

pub fn translate(t: &MatrixTuple) -> Result<Translation> {
    let vectorization = vectorize(t)?;
    let frame = spectral_frame(&vectorization)?;
    let form = CommutatorForm::new(&frame.q, &vectorization.basis)?;
    let x = DVector::from_column_slice(&frame.x);
    let residuals = TranslationResiduals {
        norm: (norm_sum(t) - frame.x.iter().sum::<f64>()).abs(),
        commutator: (comm_norm_sum(t) - form.quadratic(&x)).abs(),
    };
    let f_value = form.eval(&frame.x);
    Ok(Translation {
        vectorization,
        frame,
        form,
        residuals,
        f_value,
    })
}

pub fn translation_check(t: &MatrixTuple) -> Result<TranslationResiduals> {
    Ok(translate(t)?.residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{frob_inner, random_orthogonal, random_tuple};
    use proptest::prelude::*;

    const S2: f64 = std::f64::consts::SQRT_2;

    fn pair() -> MatrixTuple {
        MatrixTuple::new(
            SymmetryClass::Symmetric,
            vec![
                Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
                Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn basis_layout() {
        let b = sym_basis(2).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(b.index_map, vec![(0, 0), (0, 1), (1, 1)]);
        assert_eq!(b.elements[0], Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b.elements[1], Matrix::from_row_slice(2, 2, &[0.0, h, h, 0.0]));
        assert_eq!(b.elements[2], Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]));

        let b1 = sym_basis(1).unwrap();
        assert_eq!(b1.elements, vec![Matrix::identity(1, 1)]);
        assert!(sym_basis(0).is_err());
    }

    #[test]
    fn basis_is_orthonormal_and_indexed() {
        for n in 1..7 {
            let b = sym_basis(n).unwrap();
            assert_eq!(b.dim(), n * (n + 1) / 2);
            for a in 0..b.dim() {
                let (i, j) = b.pair(a);
                assert_eq!(b.index_of(i, j), Some(a));
                assert_eq!(b.index_of(j, i), Some(a));
                for c in 0..b.dim() {
                    let g = frob_inner(&b.elements[a], &b.elements[c]).unwrap();
                    let want = if a == c { 1.0 } else { 0.0 };
                    assert!((g - want).abs() <= 1e-14);
                }
            }
            assert_eq!(SymBasis::for_dim(b.dim()).unwrap().n(), n);
        }
        assert!(SymBasis::for_dim(4).is_err());
    }

    #[test]
    fn vectorize_examples() {
        let v = vectorize(&pair()).unwrap();
        let col0: Vec<f64> = v.coeffs.column(0).iter().copied().collect();
        let col1: Vec<f64> = v.coeffs.column(1).iter().copied().collect();
        assert_eq!(col0, vec![1.0, 0.0, -1.0]);
        assert!((col1[1] - S2).abs() < 1e-15 && col1[0] == 0.0 && col1[2] == 0.0);
        assert!(v.reconstruct().distance(&pair()).unwrap() <= 1e-12);

        let zero = vectorize(&MatrixTuple::zeros(3, 2, SymmetryClass::Symmetric).unwrap()).unwrap();
        assert_eq!(zero.coeffs, Matrix::zeros(6, 2));

        let skew = random_tuple(3, 2, SymmetryClass::SkewSymmetric, 0, false).unwrap();
        assert!(vectorize(&skew).is_err());
    }

    #[test]
    fn spectral_examples() {
        let v = vectorize(&pair()).unwrap();
        let gram = v.gram();
        let expected = Matrix::from_row_slice(3, 3, &[1.0, 0.0, -1.0, 0.0, 2.0, 0.0, -1.0, 0.0, 1.0]);
        assert!((&gram - expected).amax() < 1e-14);
        let f = spectral_frame(&v).unwrap();
        assert!((f.x[0] - 2.0).abs() < 1e-14 && (f.x[1] - 2.0).abs() < 1e-14 && f.x[2] == 0.0);
        assert!((f.q.determinant() - 1.0).abs() < 1e-12);

        let zero = vectorize(&MatrixTuple::zeros(2, 2, SymmetryClass::Symmetric).unwrap()).unwrap();
        let f = spectral_frame(&zero).unwrap();
        assert_eq!(f.x, vec![0.0; 3]);
        assert_eq!(f.q, Matrix::identity(3, 3));
    }

    #[test]
    fn gram_rank_bound() {
        for seed in 0..10 {
            let t = random_tuple(4, 3, SymmetryClass::Symmetric, seed, false).unwrap();
            let f = spectral_frame(&vectorize(&t).unwrap()).unwrap();
            let big = f.x[0];
            let rank = f.x.iter().filter(|&&x| x > 1e-10 * big).count();
            assert!(rank <= 3);
        }
    }

    #[test]
    fn frame_matrix_examples() {
        let b = sym_basis(2).unwrap();
        assert_eq!(frame_matrices(&Matrix::identity(3, 3), &b).unwrap(), b.elements);
        // rotation by pi/4 in the (E_11, E_22) slots
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = Matrix::from_row_slice(3, 3, &[h, 0.0, -h, 0.0, 1.0, 0.0, h, 0.0, h]);
        let frames = frame_matrices(&q, &b).unwrap();
        assert!((&frames[0] - Matrix::identity(2, 2) * h).amax() < 1e-15);
        assert!(frame_matrices(&(q * 1.1), &b).is_err());
        assert!(frame_matrices(&Matrix::identity(4, 4), &b).is_err());
    }

    #[test]
    fn form_examples() {
        let b = sym_basis(2).unwrap();
        let i3 = Matrix::identity(3, 3);
        // with lexicographic order the off-diagonal slot is the middle one:
        // f = 2 x_2 (x_1 + x_3) - (x_1 + x_2 + x_3)^2
        let c = CommutatorForm::new(&i3, &b).unwrap();
        let expected = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!((c.coeffs() - expected).amax() < 1e-15);
        assert!((f_eval(&i3, &[0.25, 0.5, 0.25], &b).unwrap() + 0.5).abs() < 1e-15);
        assert!((f_eval(&i3, &[0.25, 0.25, 0.5], &b).unwrap() + 0.625).abs() < 1e-15);
        for k in 0..3 {
            let mut x = [0.0; 3];
            x[k] = 1.0;
            assert_eq!(f_eval(&i3, &x, &b).unwrap(), -1.0);
        }
        assert!(f_eval(&i3, &[1.0, 0.0], &b).is_err());
    }

    #[test]
    fn translation_examples() {
        let r = translation_check(&pair()).unwrap();
        assert!(r.norm <= 1e-10 && r.commutator <= 1e-10);
        let z = translation_check(&MatrixTuple::zeros(3, 3, SymmetryClass::Symmetric).unwrap()).unwrap();
        assert_eq!((z.norm, z.commutator), (0.0, 0.0));
        let t = random_tuple(4, 3, SymmetryClass::Symmetric, 77, false).unwrap();
        let r = translation_check(&t).unwrap();
        assert!(r.norm <= 1e-8 && r.commutator <= 1e-8);
    }

    proptest! {
        #[test]
        fn pipeline_identity(n in 1usize..6, m in 1usize..5, seed in any::<u64>()) {
            let t = random_tuple(n, m, SymmetryClass::Symmetric, seed, false).unwrap();
            let tr = translate(&t).unwrap();
            let ns = norm_sum(&t);
            let tol = 1e-8 * (1.0 + ns * ns);
            prop_assert!((tr.f_value - (comm_norm_sum(&t) - ns * ns)).abs() <= tol);
            prop_assert!(tr.residuals.norm <= tol && tr.residuals.commutator <= tol);
            prop_assert!(tr.vectorization.reconstruct().distance(&t).unwrap() <= 1e-12 * (1.0 + ns.sqrt()));
            let bn = tr.vectorization.coeffs.norm_squared();
            prop_assert!((bn - ns).abs() <= 1e-12 * (1.0 + ns));
            let q = &tr.frame.q;
            let recon = q * Matrix::from_diagonal(&DVector::from_vec(tr.frame.x.clone())) * q.transpose();
            prop_assert!((recon - tr.vectorization.gram()).amax() <= 1e-9 * (1.0 + ns));
            prop_assert!((q.determinant() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn form_structure(n in 1usize..5, seed in any::<u64>(), s in 0.1f64..5.0) {
            let b = sym_basis(n).unwrap();
            let q = random_orthogonal(b.dim(), seed, true).unwrap();
            let frames = frame_matrices(&q, &b).unwrap();
            for a in 0..frames.len() {
                for c in 0..frames.len() {
                    let g = frob_inner(&frames[a], &frames[c]).unwrap();
                    let delta = if a == c { 1.0 } else { 0.0 };
                    prop_assert!((g - delta).abs() <= 1e-12);
                }
            }
            let form = CommutatorForm::new(&q, &b).unwrap();
            let c = form.coeffs();
            prop_assert!((c - c.transpose()).amax() == 0.0);
            prop_assert!((0..form.dim()).all(|a| c[(a, a)] == 0.0));
            let x: Vec<f64> = (0..form.dim()).map(|k| ((k * 7 + 3) % 5) as f64 + 0.5).collect();
            let sum: f64 = x.iter().sum();
            let x: Vec<f64> = x.iter().map(|v| v / sum).collect();
            let sx: Vec<f64> = x.iter().map(|v| v * s).collect();
            let base = form.eval(&x);
            prop_assert!((form.eval(&sx) - s * s * base).abs() <= 1e-12 * (1.0 + s * s));
        }
    }
}
