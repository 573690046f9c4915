//! Dense matrix tuples `(B_1, ..., B_m)` and the operations every other module
//! builds on: Frobenius inner products, commutators, the `O(n) x O(m)` action,
//! centering and seeded random generation.
//!
//! Sums over pairs follow the ordered-pair convention: `comm_norm_sum` counts
//! both `(r, s)` and `(s, r)`, so every unordered pair contributes twice.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Tolerance for symmetry / skew-symmetry validation of inputs.
pub const TOL_SYM: f64 = 1e-9;
/// Tolerance for orthogonality validation of group elements.
pub const TOL_ORTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    Symmetric,
    #[serde(rename = "skew")]
    SkewSymmetric,
}

impl SymmetryClass {
    /// Sign `s` such that members satisfy `A^t = s A`.
    pub fn transpose_sign(self) -> f64 {
        match self {
            SymmetryClass::Symmetric => 1.0,
            SymmetryClass::SkewSymmetric => -1.0,
        }
    }

    /// Orthogonal projection of an arbitrary square matrix onto the class.
    pub fn project(self, a: &Matrix) -> Matrix {
        let at = a.transpose();
        match self {
            SymmetryClass::Symmetric => (a + at) * 0.5,
            SymmetryClass::SkewSymmetric => (a - at) * 0.5,
        }
    }

    /// Max-entry deviation of `a` from the class, relative to `max(1, max|a_ij|)`.
    pub fn deviation(self, a: &Matrix) -> f64 {
        let s = self.transpose_sign();
        let n = a.nrows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                dev = dev.max((a[(i, j)] - s * a[(j, i)]).abs());
            }
        }
        dev / a.amax().max(1.0)
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymmetryClass::Symmetric => write!(f, "symmetric"),
            SymmetryClass::SkewSymmetric => write!(f, "skew"),
        }
    }
}

/// An ordered tuple of `m` real `n x n` matrices of one symmetry class.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    n: usize,
    mats: Vec<Matrix>,
    symmetry: SymmetryClass,
}

impl MatrixTuple {
    pub fn new(symmetry: SymmetryClass, mats: Vec<Matrix>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::Dimension("tuple must contain at least one matrix".into()));
        };
        let n = first.nrows();
        if n == 0 {
            return Err(Error::Dimension("matrices must be at least 1x1".into()));
        }
        for (index, a) in mats.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Dimension(format!(
                    "matrix {index} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("matrix {index}")));
            }
            let deviation = symmetry.deviation(a);
            if deviation > TOL_SYM {
                return Err(Error::Symmetry {
                    index,
                    expected: symmetry,
                    deviation,
                });
            }
        }
        Ok(Self { n, mats, symmetry })
    }

    /// Builds a tuple without validation; callers guarantee the invariants.
    pub(crate) fn from_parts(symmetry: SymmetryClass, mats: Vec<Matrix>) -> Self {
        debug_assert!(!mats.is_empty());
        let n = mats[0].nrows();
        Self { n, mats, symmetry }
    }

    pub fn zeros(n: usize, m: usize, symmetry: SymmetryClass) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Dimension("n and m must be positive".into()));
        }
        Ok(Self::from_parts(symmetry, vec![Matrix::zeros(n, n); m]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.mats.len()
    }

    pub fn mats(&self) -> &[Matrix] {
        &self.mats
    }

    pub fn into_mats(self) -> Vec<Matrix> {
        self.mats
    }

    pub fn symmetry(&self) -> SymmetryClass {
        self.symmetry
    }

    /// Row-major nested arrays, one per matrix.
    pub fn to_rows(&self) -> Vec<Vec<Vec<f64>>> {
        self.mats.iter().map(matrix_rows).collect()
    }

    pub fn traces(&self) -> Vec<f64> {
        self.mats.iter().map(|a| a.trace()).collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_parts(self.symmetry, self.mats.iter().map(|a| a * s).collect())
    }

    /// Frobenius distance between two tuples of identical shape.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.n != other.n || self.m() != other.m() {
            return Err(Error::Dimension(format!(
                "tuple shapes differ: ({}, {}) vs ({}, {})",
                self.n,
                self.m(),
                other.n,
                other.m()
            )));
        }
        Ok(self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt())
    }
}

/// An element `(P, R)` of `O(n) x O(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    p: Matrix,
    r: Matrix,
}

impl GroupElement {
    pub fn new(p: Matrix, r: Matrix) -> Result<Self> {
        check_orthogonal(&p, "P")?;
        check_orthogonal(&r, "R")?;
        Ok(Self { p, r })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            p: Matrix::identity(n, n),
            r: Matrix::identity(m, m),
        }
    }

    /// Haar-random element of `O(n) x O(m)`; determinants are not fixed.
    pub fn random(n: usize, m: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            p: random_orthogonal_with(n, false, &mut rng),
            r: random_orthogonal_with(m, false, &mut rng),
        }
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }
}

/// Largest entry of `|Q^t Q - I|`.
pub fn orthogonality_defect(q: &Matrix) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - Matrix::identity(k, k)).amax()
}

fn check_orthogonal(q: &Matrix, which: &'static str) -> Result<()> {
    if q.nrows() != q.ncols() || q.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "{which} must be a non-empty square matrix, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let deviation = orthogonality_defect(q);
    if deviation.is_nan() || deviation > TOL_ORTH {
        return Err(Error::NotOrthogonal { which, deviation });
    }
    Ok(())
}

fn check_same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

pub fn matrix_rows(a: &Matrix) -> Vec<Vec<f64>> {
    a.row_iter().map(|row| row.iter().copied().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// `<A, B> = trace(A B^t)`.
pub fn frob_inner(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(a.dot(b))
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_same_shape(a, b)?;
    if !a.is_square() {
        return Err(Error::Dimension(format!("{:?} is not square", a.shape())));
    }
    Ok(bracket(a, b))
}

pub(crate) fn bracket(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

/// `sum_{r,s=1..m} ||[B_r, B_s]||^2` over ordered pairs.
pub fn comm_norm_sum(t: &MatrixTuple) -> f64 {
    let mats = t.mats();
    let mut total = 0.0;
    for r in 0..mats.len() {
        for s in (r + 1)..mats.len() {
            total += bracket(&mats[r], &mats[s]).norm_squared();
        }
    }
    2.0 * total
}

/// `sum_r ||B_r||^2`.
pub fn norm_sum(t: &MatrixTuple) -> f64 {
    t.mats().iter().map(|a| a.norm_squared()).sum()
}

/// `(P, R) . (B_1, ..., B_m) = (P^t B_1 P, ..., P^t B_m P) R`; the r-th output
/// is `sum_s R_{sr} P^t B_s P`.
pub fn act(g: &GroupElement, t: &MatrixTuple) -> Result<MatrixTuple> {
    if g.p.nrows() != t.n() || g.r.nrows() != t.m() {
        return Err(Error::Dimension(format!(
            "group element acts on ({}, {}), tuple is ({}, {})",
            g.p.nrows(),
            g.r.nrows(),
            t.n(),
            t.m()
        )));
    }
    Ok(act_unchecked(&g.p, &g.r, t))
}

pub(crate) fn act_unchecked(p: &Matrix, r: &Matrix, t: &MatrixTuple) -> MatrixTuple {
    let pt = p.transpose();
    let conj: Vec<Matrix> = t.mats().iter().map(|b| &pt * b * p).collect();
    MatrixTuple::from_parts(t.symmetry(), recombine(&conj, r))
}

/// `out_r = sum_s R_{sr} mats_s`.
pub(crate) fn recombine(mats: &[Matrix], r: &Matrix) -> Vec<Matrix> {
    let n = mats[0].nrows();
    (0..r.ncols())
        .map(|col| {
            let mut acc = Matrix::zeros(n, n);
            for (s, b) in mats.iter().enumerate() {
                let w = r[(s, col)];
                if w != 0.0 {
                    acc += b * w;
                }
            }
            acc
        })
        .collect()
}

/// Removes the pure-trace part `(trace/n) I` from every matrix.
pub fn center(t: &MatrixTuple) -> Result<MatrixTuple> {
    if t.symmetry() != SymmetryClass::Symmetric {
        return Err(Error::Domain(
            "centering applies to symmetric tuples only".into(),
        ));
    }
    let n = t.n();
    let mats = t
        .mats()
        .iter()
        .map(|a| {
            let shift = a.trace() / n as f64;
            let mut b = a.clone();
            for i in 0..n {
                b[(i, i)] -= shift;
            }
            b
        })
        .collect();
    Ok(MatrixTuple::from_parts(SymmetryClass::Symmetric, mats))
}

pub fn random_tuple(
    n: usize,
    m: usize,
    symmetry: SymmetryClass,
    seed: u64,
    traceless: bool,
) -> Result<MatrixTuple> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_tuple_with(n, m, symmetry, traceless, &mut rng)
}

/// Gaussian entries, then symmetrized `(A + A^t)/2` or antisymmetrized
/// `(A - A^t)/2`.
pub fn random_tuple_with<R: Rng + ?Sized>(
    n: usize,
    m: usize,
    symmetry: SymmetryClass,
    traceless: bool,
    rng: &mut R,
) -> Result<MatrixTuple> {
    if n == 0 || m == 0 {
        return Err(Error::Dimension("n and m must be positive".into()));
    }
    let mats = (0..m)
        .map(|_| symmetry.project(&gaussian_matrix(n, n, rng)))
        .collect();
    let t = MatrixTuple::from_parts(symmetry, mats);
    if traceless && symmetry == SymmetryClass::Symmetric {
        center(&t)
    } else {
        Ok(t)
    }
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_orthogonal(k: usize, seed: u64, special: bool) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::Dimension("k must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_orthogonal_with(k, special, &mut rng))
}

/// Haar sample: QR of a Gaussian matrix with the signs of `diag(R)` moved
/// into `Q`. With `special`, the first column is negated when `det = -1`.
pub fn random_orthogonal_with<R: Rng + ?Sized>(k: usize, special: bool, rng: &mut R) -> Matrix {
    let qr = gaussian_matrix(k, k, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if special && q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}
