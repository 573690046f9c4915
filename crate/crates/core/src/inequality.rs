//! The commutator-norm inequality
//! `sum_{r,s} ||[B_r, B_s]||^2 <= k(n) (sum_r ||B_r||^2)^2`
//! with its sharp constant for symmetric and skew-symmetric tuples.

use serde::{Deserialize, Serialize};

use crate::matrix_core::{comm_norm_sum, norm_sum, MatrixTuple, SymmetryClass};

/// Sharp constant `k(n)` of the inequality.
///
/// Symmetric tuples: 1 for every `n`. Skew tuples: 1/3 at `n = 3`, 2/3 for
/// `n >= 4`, and 0 for `n <= 2`, where `so(n)` is abelian and every bracket
/// vanishes.
pub fn sharp_constant(n: usize, symmetry: SymmetryClass) -> f64 {
    match symmetry {
        SymmetryClass::Symmetric => 1.0,
        SymmetryClass::SkewSymmetric => match n {
            0..=2 => 0.0,
            3 => 1.0 / 3.0,
            _ => 2.0 / 3.0,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    /// `sum_{r,s} ||[B_r, B_s]||^2`.
    pub lhs: f64,
    /// `k(n) (sum_r ||B_r||^2)^2`.
    pub bound: f64,
    /// `bound - lhs`.
    pub defect: f64,
    /// `lhs / bound`, 0 when the bound vanishes.
    pub ratio: f64,
    pub constant_used: f64,
    pub traces: Vec<f64>,
}

impl DefectReport {
    /// Normalization used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.bound.max(1.0)
    }
}

pub fn defect(t: &MatrixTuple) -> DefectReport {
    let constant_used = sharp_constant(t.n(), t.symmetry());
    let lhs = comm_norm_sum(t);
    let s = norm_sum(t);
    let bound = constant_used * s * s;
    let ratio = if bound > 0.0 { lhs / bound } else { 0.0 };
    DefectReport {
        lhs,
        bound,
        defect: bound - lhs,
        ratio,
        constant_used,
        traces: t.traces(),
    }
}

/// Threshold test `|defect| <= tol * max(1, bound)`. Structural confirmation
/// lives in [`crate::normal_form`].
pub fn is_equality(t: &MatrixTuple, tol: f64) -> bool {
    let report = defect(t);
    report.defect.abs() <= tol * report.scale()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{act, center, random_tuple, GroupElement, Matrix};
    use proptest::prelude::*;

    fn pair(mu: f64) -> MatrixTuple {
        MatrixTuple::new(
            SymmetryClass::Symmetric,
            vec![
                Matrix::from_row_slice(2, 2, &[mu, 0.0, 0.0, -mu]),
                Matrix::from_row_slice(2, 2, &[0.0, mu, mu, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn constants() {
        assert_eq!(sharp_constant(5, SymmetryClass::Symmetric), 1.0);
        assert_eq!(sharp_constant(1, SymmetryClass::Symmetric), 1.0);
        assert_eq!(sharp_constant(3, SymmetryClass::SkewSymmetric), 1.0 / 3.0);
        assert_eq!(sharp_constant(4, SymmetryClass::SkewSymmetric), 2.0 / 3.0);
        assert_eq!(sharp_constant(9, SymmetryClass::SkewSymmetric), 2.0 / 3.0);
        assert_eq!(sharp_constant(2, SymmetryClass::SkewSymmetric), 0.0);
    }

    #[test]
    fn defect_examples() {
        let r = defect(&pair(1.0));
        assert_eq!((r.lhs, r.bound, r.defect, r.ratio), (16.0, 16.0, 0.0, 1.0));
        let z = defect(&MatrixTuple::zeros(3, 2, SymmetryClass::Symmetric).unwrap());
        assert_eq!((z.lhs, z.bound, z.defect, z.ratio), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn skew_plane_rotations_commute() {
        let t = random_tuple(2, 4, SymmetryClass::SkewSymmetric, 3, false).unwrap();
        let r = defect(&t);
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn equality_threshold() {
        let mut mats = pair(1.0).into_mats();
        mats.extend(std::iter::repeat_n(Matrix::zeros(2, 2), 3));
        let padded = MatrixTuple::new(SymmetryClass::Symmetric, mats).unwrap();
        assert!(is_equality(&padded, 1e-10));

        let single = MatrixTuple::new(
            SymmetryClass::Symmetric,
            vec![Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 0.0])],
        )
        .unwrap();
        assert!(!is_equality(&single, 1e-6));

        let generic = random_tuple(3, 3, SymmetryClass::Symmetric, 17, false).unwrap();
        assert!(!is_equality(&generic, 1e-6));
    }

    #[test]
    fn single_matrix_lhs_is_exactly_zero() {
        for seed in 0..20 {
            let t = random_tuple(4, 1, SymmetryClass::Symmetric, seed, false).unwrap();
            assert_eq!(defect(&t).lhs, 0.0);
        }
    }

    proptest! {
        #[test]
        fn symmetric_bound_holds(n in 1usize..7, m in 1usize..6, seed in any::<u64>(), traceless in any::<bool>()) {
            let t = random_tuple(n, m, SymmetryClass::Symmetric, seed, traceless).unwrap();
            let r = defect(&t);
            prop_assert!(r.defect >= -1e-9 * r.scale());
            prop_assert!(r.ratio <= 1.0 + 1e-9);
        }

        #[test]
        fn skew_bound_holds(n in 3usize..7, m in 1usize..6, seed in any::<u64>()) {
            let t = random_tuple(n, m, SymmetryClass::SkewSymmetric, seed, false).unwrap();
            let r = defect(&t);
            prop_assert!(r.defect >= -1e-9 * r.scale());
        }

        #[test]
        fn scaling_covariance(seed in any::<u64>(), s in 0.1f64..10.0) {
            let t = random_tuple(3, 3, SymmetryClass::Symmetric, seed, false).unwrap();
            let a = defect(&t);
            let b = defect(&t.scaled(s));
            let s4 = s.powi(4);
            prop_assert!((b.lhs - s4 * a.lhs).abs() <= 1e-10 * (1.0 + b.lhs));
            prop_assert!((b.bound - s4 * a.bound).abs() <= 1e-10 * (1.0 + b.bound));
            prop_assert!((b.ratio - a.ratio).abs() <= 1e-10);
        }

        #[test]
        fn group_invariance(seed in any::<u64>(), skew in any::<bool>()) {
            let sym = if skew { SymmetryClass::SkewSymmetric } else { SymmetryClass::Symmetric };
            let t = random_tuple(4, 3, sym, seed, false).unwrap();
            let g = GroupElement::random(4, 3, seed ^ 0xabcdef);
            let a = defect(&t);
            let b = defect(&act(&g, &t).unwrap());
            let tol = 1e-9 * (1.0 + a.bound);
            prop_assert!((a.lhs - b.lhs).abs() <= tol);
            prop_assert!((a.bound - b.bound).abs() <= tol);
            prop_assert!((a.defect - b.defect).abs() <= tol);
            prop_assert!((a.ratio - b.ratio).abs() <= 1e-9);
        }

        #[test]
        fn centering_shrinks_defect(seed in any::<u64>(), n in 1usize..6, m in 1usize..5) {
            let t = random_tuple(n, m, SymmetryClass::Symmetric, seed, false).unwrap();
            let a = defect(&t);
            let b = defect(&center(&t).unwrap());
            prop_assert!(b.defect <= a.defect + 1e-9 * a.scale());
            prop_assert!(b.bound <= a.bound + 1e-12 * a.scale());
        }
    }
}
