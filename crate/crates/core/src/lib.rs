//! Commutator-norm inequalities for tuples of symmetric and skew-symmetric
//! matrices, the curvature invariants of submanifolds built on them, and
//! tools for probing where equality holds.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod inequality;
mod linalg;
pub mod matrix_core;
pub mod normal_form;
pub mod search;
pub mod translation;

pub use error::{Error, Result};
pub use geometry::{curvature_report, CurvatureReport, ShapeOperatorSet};
pub use inequality::{defect, is_equality, sharp_constant, DefectReport};
pub use matrix_core::{GroupElement, Matrix, MatrixTuple, SymmetryClass};
pub use normal_form::{detect, NormalFormKind, NormalFormResult};
