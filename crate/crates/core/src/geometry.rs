//! Pointwise curvature invariants of a submanifold `M^n` in a space form
//! `N^{n+m}(c)`, computed from its shape operators in orthonormal tangent and
//! normal frames.
//!
//! Two independent routes are provided for the normalized scalar curvature
//! (Gauss equation vs. centered shape operators) and for the normal scalar
//! curvature (Ricci equation vs. commutator norms), so each can be checked
//! against the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_core::{
    act_unchecked, bracket, center, comm_norm_sum, GroupElement, Matrix, MatrixTuple,
    SymmetryClass,
};

/// Shape operators `A_{xi_1}, ..., A_{xi_m}` at a point plus the ambient
/// sectional curvature `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeOperatorSet {
    ops: MatrixTuple,
    c: f64,
}

impl ShapeOperatorSet {
    pub fn new(ops: Vec<Matrix>, c: f64) -> Result<Self> {
        if !c.is_finite() {
            return Err(Error::NonFinite("ambient curvature".into()));
        }
        Ok(Self {
            ops: MatrixTuple::new(SymmetryClass::Symmetric, ops)?,
            c,
        })
    }

    pub fn from_tuple(ops: MatrixTuple, c: f64) -> Result<Self> {
        if ops.symmetry() != SymmetryClass::Symmetric {
            return Err(Error::Domain("shape operators must be symmetric".into()));
        }
        Ok(Self { ops, c })
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    pub fn m(&self) -> usize {
        self.ops.m()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn ops(&self) -> &[Matrix] {
        self.ops.mats()
    }

    pub fn as_tuple(&self) -> &MatrixTuple {
        &self.ops
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// Traceless parts `B_r = A_r - <H, xi_r> I`.
    pub fn traceless(&self) -> MatrixTuple {
        center(&self.ops).expect("shape operators are symmetric")
    }

    /// Change of tangent frame by `P` and of normal frame by `R`.
    pub fn act(&self, g: &GroupElement) -> Result<Self> {
        let ops = crate::matrix_core::act(g, &self.ops)?;
        Ok(Self { ops, c: self.c })
    }

    /// `1 + |H|^2 + |c| + sum_r ||A_r||^2`, the normalization for relative
    /// tolerances.
    pub fn scale(&self) -> f64 {
        let h2: f64 = mean_curvature(self).iter().map(|h| h * h).sum();
        1.0 + h2 + self.c.abs() + self.ops().iter().map(|a| a.norm_squared()).sum::<f64>()
    }

    fn require_curvature_dim(&self) -> Result<()> {
        if self.n() < 2 {
            return Err(Error::Domain(format!(
                "curvature invariants need n >= 2, got n = {}",
                self.n()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub rho: f64,
    pub rho_perp: f64,
    /// `|H|^2`.
    pub h_norm_sq: f64,
    /// `|H|^2 + c - rho - rho_perp`.
    pub wintgen_defect: f64,
    /// `|H|^2 + c - rho`.
    pub chen_defect: f64,
    pub scale: f64,
}

/// Components `<H, xi_r> = trace(A_r) / n`.
pub fn mean_curvature(s: &ShapeOperatorSet) -> Vec<f64> {
    let n = s.n() as f64;
    s.ops().iter().map(|a| a.trace() / n).collect()
}

fn pair_weight(n: usize) -> f64 {
    2.0 / (n * (n - 1)) as f64
}

/// Gauss equation with `X = T = e_i`, `Y = Z = e_j`, summed over `i < j`.
pub fn rho_direct(s: &ShapeOperatorSet) -> Result<f64> {
    s.require_curvature_dim()?;
    let n = s.n();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += s.c;
            for a in s.ops() {
                sum += a[(i, i)] * a[(j, j)] - a[(i, j)] * a[(i, j)];
            }
        }
    }
    Ok(pair_weight(n) * sum)
}

/// `|H|^2 + c - (1/(n(n-1))) sum_r ||B_r||^2` with `B_r` the centered
/// shape operators.
pub fn rho_via_translation(s: &ShapeOperatorSet) -> Result<f64> {
    s.require_curvature_dim()?;
    let n = s.n();
    let h2: f64 = mean_curvature(s).iter().map(|h| h * h).sum();
    let b2: f64 = s.traceless().mats().iter().map(|b| b.norm_squared()).sum();
    Ok(h2 + s.c - b2 / (n * (n - 1)) as f64)
}

/// Ricci-equation route: `(2/(n(n-1))) sqrt(sum_{i<j} sum_{r<s} [A_r, A_s]_{ij}^2)`.
pub fn rho_perp(s: &ShapeOperatorSet) -> Result<f64> {
    s.require_curvature_dim()?;
    let n = s.n();
    let ops = s.ops();
    let mut sum = 0.0;
    for r in 0..ops.len() {
        for q in (r + 1)..ops.len() {
            let k = bracket(&ops[r], &ops[q]);
            for i in 0..n {
                for j in (i + 1)..n {
                    sum += k[(i, j)] * k[(i, j)];
                }
            }
        }
    }
    Ok(pair_weight(n) * sum.sqrt())
}

/// Commutator route: `(1/(n(n-1))) sqrt(sum_{r,s} ||[B_r, B_s]||^2)`.
pub fn rho_perp_via_commutators(s: &ShapeOperatorSet) -> Result<f64> {
    s.require_curvature_dim()?;
    let n = s.n();
    Ok(comm_norm_sum(&s.traceless()).sqrt() / (n * (n - 1)) as f64)
}

pub fn curvature_report(s: &ShapeOperatorSet) -> Result<CurvatureReport> {
    let rho = rho_direct(s)?;
    let rho_perp = rho_perp(s)?;
    let h_norm_sq: f64 = mean_curvature(s).iter().map(|h| h * h).sum();
    Ok(CurvatureReport {
        rho,
        rho_perp,
        h_norm_sq,
        wintgen_defect: h_norm_sq + s.c - rho - rho_perp,
        chen_defect: h_norm_sq + s.c - rho,
        scale: s.scale(),
    })
}

/// The ellipse of curvature `{h(X, X) : |X| = 1}` of a surface, written as
/// `H + cos(2t) u + sin(2t) v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEllipse {
    pub center: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl CurvatureEllipse {
    /// Whether the ellipse is a circle (possibly of radius 0): `u` and `v`
    /// orthogonal with equal lengths, relative to `|u|^2 + |v|^2`.
    pub fn is_circle(&self, tol: f64) -> bool {
        let uu: f64 = self.u.iter().map(|x| x * x).sum();
        let vv: f64 = self.v.iter().map(|x| x * x).sum();
        let uv: f64 = self.u.iter().zip(&self.v).map(|(a, b)| a * b).sum();
        let size = uu + vv;
        uv.abs() <= tol * size && (uu - vv).abs() <= tol * size
    }
}

pub fn curvature_ellipse(s: &ShapeOperatorSet) -> Result<CurvatureEllipse> {
    if s.n() != 2 {
        return Err(Error::Domain(format!(
            "the curvature ellipse is defined for surfaces (n = 2), got n = {}",
            s.n()
        )));
    }
    Ok(CurvatureEllipse {
        center: mean_curvature(s),
        u: s.ops().iter().map(|a| (a[(0, 0)] - a[(1, 1)]) / 2.0).collect(),
        v: s.ops().iter().map(|a| a[(0, 1)]).collect(),
    })
}

pub fn ellipse_circle_test(s: &ShapeOperatorSet, tol: f64) -> Result<bool> {
    Ok(curvature_ellipse(s)?.is_circle(tol))
}

/// Shape operators attaining `rho + rho_perp = |H|^2 + c`:
/// `A_1 = diag(l1 + mu, l1 - mu, l1, ..., l1)`, `A_2 = l2 I + mu (E_12 + E_21)`,
/// `A_3 = l3 I`, all others zero; ambient curvature 0 (see [`ShapeOperatorSet::with_c`]).
pub fn equality_shape_ops(
    n: usize,
    m: usize,
    mu: f64,
    lambda1: f64,
    lambda2: f64,
    lambda3: f64,
) -> Result<ShapeOperatorSet> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    let needed = if lambda3 != 0.0 { 3 } else { 2 };
    if m < needed {
        return Err(Error::InvalidParameter(format!(
            "need m >= {needed} for these parameters, got {m}"
        )));
    }
    if ![mu, lambda1, lambda2, lambda3].iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("equality parameters".into()));
    }
    let mut ops = vec![Matrix::zeros(n, n); m];
    ops[0] = Matrix::identity(n, n) * lambda1;
    ops[0][(0, 0)] += mu;
    ops[0][(1, 1)] -= mu;
    ops[1] = Matrix::identity(n, n) * lambda2;
    ops[1][(0, 1)] = mu;
    ops[1][(1, 0)] = mu;
    if m >= 3 {
        ops[2] = Matrix::identity(n, n) * lambda3;
    }
    ShapeOperatorSet::new(ops, 0.0)
}

/// Convenience: transform a set by an explicit `(P, R)` without validation.
pub(crate) fn act_set(s: &ShapeOperatorSet, p: &Matrix, r: &Matrix) -> ShapeOperatorSet {
    ShapeOperatorSet {
        ops: act_unchecked(p, r, &s.ops),
        c: s.c,
    }
}
