//! Equality configurations of the commutator inequality and their detection
//! under the `O(n) x O(m)` action.
//!
//! Canonical forms:
//! - symmetric: `H_1 = diag(mu, -mu, 0, ...)`, `H_2 = mu (E_12 + E_21)`;
//! - skew, `n = 3`: `C_1, C_2, C_3 = lambda (E_12 - E_21), lambda (E_13 - E_31), lambda (E_23 - E_32)`;
//! - skew, `n >= 4`: the quaternionic triple `diag(D_i, 0)` on a 4-dimensional block.
//!
//! Detection first reads the tuple's `m x m` Gram matrix, whose spectrum must
//! be `(2 mu^2, 2 mu^2, 0, ...)` (resp. three equal eigenvalues) at equality;
//! its eigenvectors give `R`. `P` is then built from the rotated matrices and
//! the result is accepted only if `(P, R) . t` lies within `tol` of the exact
//! canonical tuple.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{act_set, mean_curvature, ShapeOperatorSet};
use crate::linalg::{complete_orthonormal, nearest_orthogonal, reflector_to_first_axis, sym_eigen_desc};
use crate::matrix_core::{
    act_unchecked, bracket, norm_sum, recombine, Matrix, MatrixTuple, SymmetryClass,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalFormKind {
    SymmetricPair,
    SkewTriple3,
    SkewQuaternionic4,
    Zero,
    NotEquality,
}

impl NormalFormKind {
    pub fn is_equality(self) -> bool {
        !matches!(self, NormalFormKind::NotEquality)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormalFormKind::SymmetricPair => "symmetric_pair",
            NormalFormKind::SkewTriple3 => "skew_triple3",
            NormalFormKind::SkewQuaternionic4 => "skew_quaternionic4",
            NormalFormKind::Zero => "zero",
            NormalFormKind::NotEquality => "not_equality",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormResult {
    pub kind: NormalFormKind,
    pub p: Matrix,
    pub r: Matrix,
    /// `mu` or `lambda`, always `>= 0`.
    pub parameter: f64,
    /// Frobenius distance from `(P, R) . t` to the canonical tuple. On early
    /// rejection this is the distance to the zero tuple.
    pub residual: f64,
}

impl NormalFormResult {
    fn trivial(kind: NormalFormKind, n: usize, m: usize, residual: f64) -> Self {
        Self {
            kind,
            p: Matrix::identity(n, n),
            r: Matrix::identity(m, m),
            parameter: 0.0,
            residual,
        }
    }
}

fn check_parameter(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and >= 0, got {value}"
        )));
    }
    Ok(())
}

fn unit_skew(n: usize, i: usize, j: usize, scale: f64) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    a[(i, j)] = scale;
    a[(j, i)] = -scale;
    a
}

/// `(H_1, H_2, 0, ..., 0)`.
pub fn make_symmetric_pair(n: usize, m: usize, mu: f64) -> Result<MatrixTuple> {
    check_parameter("mu", mu)?;
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be positive".into()));
    }
    if mu > 0.0 && (n < 2 || m < 2) {
        return Err(Error::InvalidParameter(format!(
            "a nonzero symmetric pair needs n, m >= 2, got n = {n}, m = {m}"
        )));
    }
    let mut mats = vec![Matrix::zeros(n, n); m];
    if mu > 0.0 {
        mats[0][(0, 0)] = mu;
        mats[0][(1, 1)] = -mu;
        mats[1][(0, 1)] = mu;
        mats[1][(1, 0)] = mu;
    }
    Ok(MatrixTuple::from_parts(SymmetryClass::Symmetric, mats))
}

/// `(C_1, C_2, C_3, 0, ..., 0)` at `n = 3`.
pub fn make_skew_triple3(m: usize, lambda: f64) -> Result<MatrixTuple> {
    check_parameter("lambda", lambda)?;
    if m == 0 {
        return Err(Error::InvalidParameter("m must be positive".into()));
    }
    if lambda > 0.0 && m < 3 {
        return Err(Error::InvalidParameter(format!(
            "a nonzero skew triple needs m >= 3, got {m}"
        )));
    }
    let mut mats = vec![Matrix::zeros(3, 3); m];
    if lambda > 0.0 {
        mats[0] = unit_skew(3, 0, 1, lambda);
        mats[1] = unit_skew(3, 0, 2, lambda);
        mats[2] = unit_skew(3, 1, 2, lambda);
    }
    Ok(MatrixTuple::from_parts(SymmetryClass::SkewSymmetric, mats))
}

/// `(diag(D_1, 0), diag(D_2, 0), diag(D_3, 0), 0, ..., 0)`.
pub fn make_skew_quaternionic(n: usize, m: usize, lambda: f64) -> Result<MatrixTuple> {
    check_parameter("lambda", lambda)?;
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be positive".into()));
    }
    if lambda > 0.0 && (n < 4 || m < 3) {
        return Err(Error::InvalidParameter(format!(
            "a nonzero quaternionic triple needs n >= 4 and m >= 3, got n = {n}, m = {m}"
        )));
    }
    let mut mats = vec![Matrix::zeros(n, n); m];
    if lambda > 0.0 {
        mats[0] = unit_skew(n, 0, 1, lambda) + unit_skew(n, 2, 3, lambda);
        mats[1] = unit_skew(n, 0, 2, lambda) + unit_skew(n, 3, 1, lambda);
        mats[2] = unit_skew(n, 0, 3, lambda) + unit_skew(n, 1, 2, lambda);
    }
    Ok(MatrixTuple::from_parts(SymmetryClass::SkewSymmetric, mats))
}

/// Linear scale for residual and trace tolerances.
fn linear_scale(t: &MatrixTuple) -> f64 {
    norm_sum(t).sqrt().max(1.0)
}

fn gram(mats: &[Matrix]) -> Matrix {
    let m = mats.len();
    Matrix::from_fn(m, m, |r, s| mats[r].dot(&mats[s]))
}

/// Gram spectrum must be `k` equal leading eigenvalues followed by zeros.
fn gram_pattern(values: &[f64], k: usize, tol: f64) -> bool {
    let top = values[0];
    let slack = tol * (1.0 + top);
    values.len() >= k
        && (values[0] - values[k - 1]).abs() <= slack
        && values[k..].iter().all(|v| v.abs() <= slack)
}

fn finish(
    t: &MatrixTuple,
    kind: NormalFormKind,
    p: Matrix,
    r: Matrix,
    parameter: f64,
    canonical: &MatrixTuple,
    tol: f64,
) -> NormalFormResult {
    let residual = act_unchecked(&p, &r, t)
        .distance(canonical)
        .expect("canonical tuple has the input's shape");
    let kind = if residual <= tol * linear_scale(t) {
        kind
    } else {
        NormalFormKind::NotEquality
    };
    NormalFormResult {
        kind,
        p,
        r,
        parameter,
        residual,
    }
}

pub fn detect_symmetric(t: &MatrixTuple, tol: f64) -> Result<NormalFormResult> {
    if t.symmetry() != SymmetryClass::Symmetric {
        return Err(Error::Domain("detect_symmetric needs a symmetric tuple".into()));
    }
    let (n, m) = (t.n(), t.m());
    let ns = norm_sum(t);
    if ns <= tol {
        return Ok(NormalFormResult::trivial(NormalFormKind::Zero, n, m, ns.sqrt()));
    }
    let reject = || Ok(NormalFormResult::trivial(NormalFormKind::NotEquality, n, m, ns.sqrt()));
    if n < 2 || m < 2 {
        return reject();
    }
    // Equality forces traceless matrices: centering keeps the brackets and
    // shrinks the bound.
    let lin = linear_scale(t);
    if t.traces().iter().any(|tr| tr.abs() > tol * lin) {
        return reject();
    }

    let (g, mut r) = sym_eigen_desc(&gram(t.mats()))?;
    if !gram_pattern(&g, 2, tol) {
        return reject();
    }
    let mu = ((g[0] + g[1]) / 4.0).max(0.0).sqrt();
    if r.determinant() < 0.0 && m > 2 {
        r.column_mut(m - 1).neg_mut();
    }
    let rotated = recombine(t.mats(), &r);

    let (vals, w) = sym_eigen_desc(&rotated[0])?;
    let spectrum_ok = (vals[0] - mu).abs() <= tol * lin
        && (vals[n - 1] + mu).abs() <= tol * lin
        && vals[1..n - 1].iter().all(|v| v.abs() <= tol * lin);
    if !spectrum_ok {
        return reject();
    }
    // order eigenvectors as (mu, -mu, 0, ..., 0)
    let mut order = vec![0, n - 1];
    order.extend(1..n - 1);
    let mut p = Matrix::from_fn(n, n, |i, j| w[(i, order[j])]);
    let second = p.transpose() * &rotated[1] * &p;
    if second[(0, 1)] < 0.0 {
        p.column_mut(1).neg_mut();
    }

    let canonical = make_symmetric_pair(n, m, mu)?;
    Ok(finish(t, NormalFormKind::SymmetricPair, p, r, mu, &canonical, tol))
}

/// Axis vector of a 3x3 skew matrix: `K v = omega x v`.
fn axis(k: &Matrix) -> DVector<f64> {
    DVector::from_vec(vec![k[(2, 1)], k[(0, 2)], k[(1, 0)]])
}

pub fn detect_skew(t: &MatrixTuple, tol: f64) -> Result<NormalFormResult> {
    if t.symmetry() != SymmetryClass::SkewSymmetric {
        return Err(Error::Domain("detect_skew needs a skew-symmetric tuple".into()));
    }
    let (n, m) = (t.n(), t.m());
    if n < 3 {
        return Err(Error::Domain(format!(
            "skew equality forms need n >= 3, got n = {n}"
        )));
    }
    let ns = norm_sum(t);
    if ns <= tol {
        return Ok(NormalFormResult::trivial(NormalFormKind::Zero, n, m, ns.sqrt()));
    }
    let reject = || Ok(NormalFormResult::trivial(NormalFormKind::NotEquality, n, m, ns.sqrt()));
    if m < 3 {
        return reject();
    }
    let (g, mut r) = sym_eigen_desc(&gram(t.mats()))?;
    if !gram_pattern(&g, 3, tol) {
        return reject();
    }
    let mut rotated = recombine(t.mats(), &r);
    let total = g[0] + g[1] + g[2];

    if n == 3 {
        let lambda = (total / 6.0).max(0.0).sqrt();
        let unit = make_skew_triple3(3, 1.0)?;
        let target = Matrix::from_columns(&unit.mats().iter().map(axis).collect::<Vec<_>>());
        let mut axes = Matrix::from_columns(&rotated[..3].iter().map(axis).collect::<Vec<_>>());
        // conjugation by P in SO(3) rotates axes; orientation is fixed through R
        if (&axes * target.transpose()).determinant() < 0.0 {
            axes.column_mut(2).neg_mut();
            r.column_mut(2).neg_mut();
        }
        let p = nearest_orthogonal(&(axes * target.transpose() / lambda))?;
        let canonical = make_skew_triple3(m, lambda)?;
        return Ok(finish(t, NormalFormKind::SkewTriple3, p, r, lambda, &canonical, tol));
    }

    let lambda = (total / 12.0).max(0.0).sqrt();
    let lin = linear_scale(t);
    let rel_tol = tol * lin * lin;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let anti = &rotated[i] * &rotated[j] + &rotated[j] * &rotated[i];
            if anti.norm() > rel_tol {
                return reject();
            }
        }
    }
    let unit = make_skew_quaternionic(4, 3, 1.0)?;
    let unit_sign = bracket(&unit.mats()[0], &unit.mats()[1]).dot(&unit.mats()[2]).signum();
    if bracket(&rotated[0], &rotated[1]).dot(&rotated[2]).signum() != unit_sign {
        rotated[2].neg_mut();
        r.column_mut(2).neg_mut();
    }

    // support of the triple: B_1^2 = -lambda^2 Pi
    let support = -(&rotated[0] * &rotated[0]) / (lambda * lambda);
    let pivot = (0..n)
        .max_by(|&a, &b| support.column(a).norm().total_cmp(&support.column(b).norm()))
        .expect("n >= 4");
    let v = support.column(pivot).into_owned();
    let v = &v / v.norm();

    // the canonical frame (e_1, D_1 e_1, D_2 e_1, D_3 e_1) / lambda, mirrored on the input
    let e1 = {
        let mut e = DVector::zeros(4);
        e[0] = 1.0;
        e
    };
    let mut canon_cols = vec![e1.clone()];
    canon_cols.extend(unit.mats().iter().map(|d| d * &e1));
    let canon_frame = Matrix::from_columns(&canon_cols);
    let mut cols = vec![v.clone()];
    cols.extend(rotated[..3].iter().map(|b| b * &v / lambda));
    let block = nearest_orthogonal(&(Matrix::from_columns(&cols) * canon_frame.transpose()))?;
    let p = complete_orthonormal(&block);

    let canonical = make_skew_quaternionic(n, m, lambda)?;
    Ok(finish(t, NormalFormKind::SkewQuaternionic4, p, r, lambda, &canonical, tol))
}

/// Dispatches on the tuple's symmetry class.
pub fn detect(t: &MatrixTuple, tol: f64) -> Result<NormalFormResult> {
    match t.symmetry() {
        SymmetryClass::Symmetric => detect_symmetric(t, tol),
        SymmetryClass::SkewSymmetric => detect_skew(t, tol),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEqualityResult {
    pub normal_form: NormalFormResult,
    /// `(lambda_1, lambda_2, lambda_3)`; zero when not an equality point.
    /// When `mu > 0` the pair `(lambda_1, lambda_2)` is only defined up to a
    /// rotation, so only its norm is an invariant.
    pub lambdas: [f64; 3],
}

/// Equality form of a shape-operator set: `diag(l1 + mu, l1 - mu, l1, ...)`,
/// `l2 I + mu (E_12 + E_21)`, `l3 I`, zeros; slots beyond `m` are dropped.
fn shape_canonical(n: usize, m: usize, mu: f64, lambdas: [f64; 3]) -> MatrixTuple {
    let mut mats = vec![Matrix::zeros(n, n); m];
    for (slot, &l) in lambdas.iter().enumerate().take(m) {
        mats[slot] = Matrix::identity(n, n) * l;
    }
    if mu > 0.0 {
        mats[0][(0, 0)] += mu;
        mats[0][(1, 1)] -= mu;
        mats[1][(0, 1)] += mu;
        mats[1][(1, 0)] += mu;
    }
    MatrixTuple::from_parts(SymmetryClass::Symmetric, mats)
}

pub fn detect_shape_equality(s: &ShapeOperatorSet, tol: f64) -> Result<ShapeEqualityResult> {
    let (n, m) = (s.n(), s.m());
    if n < 2 {
        return Err(Error::Domain(format!("need n >= 2, got n = {n}")));
    }
    let h = DVector::from_vec(mean_curvature(s));
    let mut nf = detect_symmetric(&s.traceless(), tol)?;
    let (r, mu, lambdas) = match nf.kind {
        NormalFormKind::NotEquality => {
            return Ok(ShapeEqualityResult {
                normal_form: nf,
                lambdas: [0.0; 3],
            })
        }
        NormalFormKind::Zero => {
            let r = reflector_to_first_axis(&h);
            (r, 0.0, [h.norm(), 0.0, 0.0])
        }
        _ => {
            let rotated_h = nf.r.transpose() * &h;
            let mut r = nf.r.clone();
            let mut lambda3 = 0.0;
            if m > 2 {
                let rest = rotated_h.rows(2, m - 2).into_owned();
                lambda3 = rest.norm();
                let refl = reflector_to_first_axis(&rest);
                let mut block = Matrix::identity(m, m);
                block.view_mut((2, 2), (m - 2, m - 2)).copy_from(&refl);
                r = &r * block;
            }
            (r, nf.parameter, [rotated_h[0], rotated_h[1], lambda3])
        }
    };
    let transformed = act_set(s, &nf.p, &r);
    let canonical = shape_canonical(n, m, mu, lambdas);
    let residual = transformed.as_tuple().distance(&canonical)?;
    let lin = s.as_tuple().mats().iter().map(|a| a.norm_squared()).sum::<f64>().sqrt().max(1.0);
    nf.r = r;
    nf.residual = residual;
    if residual > tol * lin {
        nf.kind = NormalFormKind::NotEquality;
    }
    Ok(ShapeEqualityResult {
        normal_form: nf,
        lambdas,
    })
}
