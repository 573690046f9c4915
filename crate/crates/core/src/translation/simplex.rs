//! Maximization of `f_Q` over the truncated simplex
//! `D_eps = {x : x_a >= eps, sum_a x_a = 1}` and the numerical membership
//! test for `G_eps = {Q : f_Q < 0 on D_eps}`.
//!
//! Two solvers: multi-start projected gradient ascent with a KKT polish on
//! the final active face, and (for small `N`) an exact enumeration of all
//! faces of the polytope, solving the KKT system on each.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CommutatorForm;
use crate::error::{Error, Result};
use crate::linalg::sym_eigen_desc;
use crate::matrix_core::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexRegion {
    dim: usize,
    epsilon: f64,
}

impl SimplexRegion {
    pub fn new(dim: usize, epsilon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("simplex dimension must be positive".into()));
        }
        if !epsilon.is_finite() || epsilon < 0.0 || epsilon * dim as f64 > 1.0 + 1e-12 {
            return Err(Error::EmptyRegion { epsilon, dim });
        }
        Ok(Self { dim, epsilon })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Mass left after every coordinate takes its floor `eps`.
    fn slack(&self) -> f64 {
        (1.0 - self.epsilon * self.dim as f64).max(0.0)
    }

    /// Euclidean projection onto the region.
    pub fn project(&self, y: &DVector<f64>) -> DVector<f64> {
        let shifted = y.map(|v| v - self.epsilon);
        project_scaled_simplex(&shifted, self.slack()).map(|v| v + self.epsilon)
    }

    /// Image of a point of the standard simplex under `p -> eps + slack * p`.
    fn embed(&self, p: &DVector<f64>) -> DVector<f64> {
        p.map(|v| self.epsilon + self.slack() * v)
    }

    pub fn barycenter(&self) -> Vec<f64> {
        vec![1.0 / self.dim as f64; self.dim]
    }
}

/// Projection onto `{z >= 0, sum z = s}` (sort-and-threshold).
fn project_scaled_simplex(y: &DVector<f64>, s: f64) -> DVector<f64> {
    if s <= 0.0 {
        return DVector::zeros(y.len());
    }
    let mut u: Vec<f64> = y.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - s) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexConfig {
    /// Number of ascent starts (vertices, edge midpoints, barycenter, then random).
    pub starts: usize,
    pub max_iters: usize,
    /// Ascent stops when an iteration moves less than this (max-norm).
    pub step_tol: f64,
    pub seed: u64,
    /// Run the face-enumeration oracle when `N` is at most this.
    pub face_oracle_max_dim: usize,
    /// Strictness margin for [`g_epsilon_member`].
    pub margin: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            starts: 64,
            max_iters: 20_000,
            step_tol: 1e-15,
            seed: 0,
            face_oracle_max_dim: 6,
            margin: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexMethod {
    ProjectedGradient,
    FaceOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexMax {
    pub x: Vec<f64>,
    pub value: f64,
    pub method: SimplexMethod,
    /// Best value found by projected gradient ascent.
    pub gradient_value: f64,
    /// Best value found by face enumeration, when it ran.
    pub oracle_value: Option<f64>,
    /// Whether the winning ascent run met `step_tol` within `max_iters`.
    pub converged: bool,
}

struct Candidate {
    x: DVector<f64>,
    value: f64,
    converged: bool,
}

pub fn simplex_max(
    form: &CommutatorForm,
    region: &SimplexRegion,
    cfg: &SimplexConfig,
) -> Result<SimplexMax> {
    if form.dim() != region.dim() {
        return Err(Error::Dimension(format!(
            "form has N = {}, region has N = {}",
            form.dim(),
            region.dim()
        )));
    }
    let eval = |x: &DVector<f64>| form.eval(x.as_slice());

    if region.slack() == 0.0 {
        let x = DVector::from_element(region.dim(), region.epsilon());
        let value = eval(&x);
        return Ok(SimplexMax {
            x: x.as_slice().to_vec(),
            value,
            method: SimplexMethod::ProjectedGradient,
            gradient_value: value,
            oracle_value: None,
            converged: true,
        });
    }

    let (eigs, _) = sym_eigen_desc(form.coeffs())?;
    let lipschitz = 2.0 * eigs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

    let starts = start_points(region, cfg);
    let runs: Vec<Candidate> = starts
        .par_iter()
        .map(|x0| {
            let (x, converged) = if lipschitz > 0.0 {
                ascend(form, region, x0.clone(), 1.0 / lipschitz, cfg)
            } else {
                (x0.clone(), true)
            };
            let x = polish(form, region, &x).unwrap_or(x);
            Candidate {
                value: eval(&x),
                x,
                converged,
            }
        })
        .collect();
    let best = pick_best(runs).expect("at least one start");

    let oracle = if region.dim() <= cfg.face_oracle_max_dim {
        face_oracle(form, region)
    } else {
        None
    };

    let gradient_value = best.value;
    let oracle_value = oracle.as_ref().map(|c| c.value);
    let (winner, method) = match oracle {
        Some(o) if o.value > best.value + 1e-12 * (1.0 + best.value.abs()) => {
            (o, SimplexMethod::FaceOracle)
        }
        _ => (best, SimplexMethod::ProjectedGradient),
    };
    Ok(SimplexMax {
        x: winner.x.as_slice().to_vec(),
        value: winner.value,
        method,
        gradient_value,
        oracle_value,
        converged: winner.converged,
    })
}

/// Largest value; ties go to the earliest candidate.
fn pick_best(cands: Vec<Candidate>) -> Option<Candidate> {
    cands.into_iter().fold(None, |acc, c| match acc {
        Some(a) if a.value >= c.value => Some(a),
        _ => Some(c),
    })
}

fn start_points(region: &SimplexRegion, cfg: &SimplexConfig) -> Vec<DVector<f64>> {
    let dim = region.dim();
    let budget = cfg.starts.max(1);
    let mut pts = Vec::with_capacity(budget);
    pts.push(DVector::from_element(dim, 1.0 / dim as f64));
    for a in 0..dim {
        let mut p = DVector::zeros(dim);
        p[a] = 1.0;
        pts.push(p);
    }
    'edges: for a in 0..dim {
        for b in (a + 1)..dim {
            if pts.len() >= budget {
                break 'edges;
            }
            let mut p = DVector::zeros(dim);
            p[a] = 0.5;
            p[b] = 0.5;
            pts.push(p);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    while pts.len() < budget {
        // uniform on the simplex via normalized exponentials
        let e = DVector::from_fn(dim, |_, _| -(1.0 - rng.random::<f64>()).ln());
        let s = e.sum();
        pts.push(e / s);
    }
    pts.truncate(budget);
    pts.into_iter().map(|p| region.embed(&p)).collect()
}

fn ascend(
    form: &CommutatorForm,
    region: &SimplexRegion,
    mut x: DVector<f64>,
    step: f64,
    cfg: &SimplexConfig,
) -> (DVector<f64>, bool) {
    let c = form.coeffs();
    for _ in 0..cfg.max_iters {
        let grad = (c * &x) * 2.0;
        let next = region.project(&(&x + grad * step));
        let moved = (&next - &x).amax();
        x = next;
        if moved <= cfg.step_tol {
            return (x, true);
        }
    }
    (x, false)
}

/// Stationary point of `x^t C x` on the face where `free` coordinates vary
/// and the rest sit at `eps`; `None` when singular or infeasible.
fn face_stationary(
    form: &CommutatorForm,
    region: &SimplexRegion,
    free: &[usize],
) -> Option<DVector<f64>> {
    let dim = region.dim();
    let eps = region.epsilon();
    let k = free.len();
    let c = form.coeffs();
    let mut is_free = vec![false; dim];
    for &f in free {
        is_free[f] = true;
    }
    let fixed_mass = eps * (dim - k) as f64;
    let mut kkt = Matrix::zeros(k + 1, k + 1);
    let mut rhs = DVector::zeros(k + 1);
    for (row, &a) in free.iter().enumerate() {
        for (col, &b) in free.iter().enumerate() {
            kkt[(row, col)] = 2.0 * c[(a, b)];
        }
        kkt[(row, k)] = -1.0;
        kkt[(k, row)] = 1.0;
        let mut lin = 0.0;
        for b in 0..dim {
            if !is_free[b] {
                lin += c[(a, b)] * eps;
            }
        }
        rhs[row] = -2.0 * lin;
    }
    rhs[k] = 1.0 - fixed_mass;
    let sol = kkt.clone().lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let resid = (&kkt * &sol - &rhs).amax();
    if resid > 1e-9 * (1.0 + rhs.amax() + kkt.amax() * sol.amax()) {
        return None;
    }
    let mut x = DVector::from_element(dim, eps);
    for (row, &a) in free.iter().enumerate() {
        if sol[row] < eps - 1e-12 {
            return None;
        }
        x[a] = sol[row].max(eps);
    }
    Some(x)
}

fn polish(form: &CommutatorForm, region: &SimplexRegion, x: &DVector<f64>) -> Option<DVector<f64>> {
    let eps = region.epsilon();
    let free: Vec<usize> = (0..region.dim()).filter(|&a| x[a] > eps + 1e-12).collect();
    if free.is_empty() {
        return None;
    }
    let y = face_stationary(form, region, &free)?;
    (form.eval(y.as_slice()) >= form.eval(x.as_slice())).then_some(y)
}

/// Exact maximum over the polytope by enumerating every face. Sound because
/// the maximum of a quadratic on a polytope is attained at a KKT point of the
/// relative interior of some face, and singular faces attain their maximum on
/// a lower-dimensional face.
fn face_oracle(form: &CommutatorForm, region: &SimplexRegion) -> Option<Candidate> {
    let dim = region.dim();
    let masks: Vec<u32> = (1u32..(1u32 << dim)).collect();
    let cands: Vec<Candidate> = masks
        .par_iter()
        .filter_map(|&mask| {
            let free: Vec<usize> = (0..dim).filter(|&a| mask & (1 << a) != 0).collect();
            let x = face_stationary(form, region, &free)?;
            Some(Candidate {
                value: form.eval(x.as_slice()),
                x,
                converged: true,
            })
        })
        .collect();
    pick_best(cands)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    /// `max f_Q < -margin` on the region.
    pub member: bool,
    pub value: f64,
    pub margin: f64,
    /// Maximizer found; a certificate of non-membership when `member` is false.
    pub point: Vec<f64>,
    pub method: SimplexMethod,
}

/// Numerical test for `Q in G_eps`. A negative answer whose point has
/// `f >= 0` is a certificate; a positive answer is only as strong as the
/// maximizer.
pub fn g_epsilon_member(
    form: &CommutatorForm,
    epsilon: f64,
    cfg: &SimplexConfig,
) -> Result<Membership> {
    let region = SimplexRegion::new(form.dim(), epsilon)?;
    let best = simplex_max(form, &region, cfg)?;
    Ok(Membership {
        member: best.value < -cfg.margin,
        value: best.value,
        margin: cfg.margin,
        point: best.x,
        method: best.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_core::{random_orthogonal, random_tuple, SymmetryClass};
    use crate::translation::{spectral_frame, sym_basis, vectorize, CommutatorForm};

    fn identity_form(n: usize) -> CommutatorForm {
        let b = sym_basis(n).unwrap();
        CommutatorForm::new(&Matrix::identity(b.dim(), b.dim()), &b).unwrap()
    }

    #[test]
    fn projection_lands_in_region() {
        let r = SimplexRegion::new(4, 0.1).unwrap();
        let y = DVector::from_vec(vec![3.0, -1.0, 0.2, 0.25]);
        let p = r.project(&y);
        assert!((p.sum() - 1.0).abs() < 1e-14);
        assert!(p.iter().all(|&v| v >= 0.1 - 1e-15));
        // projection of an interior point is itself
        let inside = DVector::from_vec(vec![0.4, 0.2, 0.2, 0.2]);
        assert!((r.project(&inside) - &inside).amax() < 1e-15);
    }

    #[test]
    fn empty_region_rejected() {
        assert!(matches!(SimplexRegion::new(3, 0.5), Err(Error::EmptyRegion { .. })));
        assert!(SimplexRegion::new(3, -0.1).is_err());
        assert!(SimplexRegion::new(0, 0.0).is_err());
        assert!(SimplexRegion::new(3, 1.0 / 3.0).is_ok());
    }

    #[test]
    fn identity_n2_maximum() {
        let form = identity_form(2);
        let r = SimplexRegion::new(3, 0.0).unwrap();
        let best = simplex_max(&form, &r, &SimplexConfig::default()).unwrap();
        assert!((best.value + 0.5).abs() < 1e-9, "{best:?}");
        assert!((best.x[1] - 0.5).abs() < 1e-6, "{best:?}");
        assert!((best.oracle_value.unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_form() {
        let form = identity_form(1);
        let r = SimplexRegion::new(1, 0.0).unwrap();
        let best = simplex_max(&form, &r, &SimplexConfig::default()).unwrap();
        assert_eq!(best.x, vec![1.0]);
        assert_eq!(best.value, -1.0);
    }

    #[test]
    fn degenerate_region_is_the_barycenter() {
        let form = identity_form(2);
        let r = SimplexRegion::new(3, 1.0 / 3.0).unwrap();
        let best = simplex_max(&form, &r, &SimplexConfig::default()).unwrap();
        let bary = r.barycenter();
        assert!((best.value - form.eval(&bary)).abs() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let form = identity_form(2);
        let m = g_epsilon_member(&form, 0.01, &SimplexConfig::default()).unwrap();
        assert!(m.member);
        assert!(m.value < -0.49);

        let t = crate::normal_form::make_symmetric_pair(2, 2, 1.0).unwrap();
        let frame = spectral_frame(&vectorize(&t).unwrap()).unwrap();
        let form = CommutatorForm::new(&frame.q, &sym_basis(2).unwrap()).unwrap();
        let total: f64 = frame.x.iter().sum();
        let x: Vec<f64> = frame.x.iter().map(|v| v / total).collect();
        assert!(form.eval(&x).abs() < 1e-12);
        let m = g_epsilon_member(&form, 0.0, &SimplexConfig::default()).unwrap();
        assert!(!m.member);
        assert!(m.value.abs() < 1e-9);
    }

    #[test]
    fn haar_forms_are_members() {
        let cfg = SimplexConfig {
            starts: 16,
            ..SimplexConfig::default()
        };
        for seed in 0..50 {
            let q = random_orthogonal(3, seed, true).unwrap();
            let form = CommutatorForm::from_rotation(&q).unwrap();
            assert!(g_epsilon_member(&form, 0.05, &cfg).unwrap().member);
        }
    }

    #[test]
    fn region_monotonicity_and_bound() {
        let cfg = SimplexConfig::default();
        for seed in 0..8 {
            let q = random_orthogonal(6, seed, true).unwrap();
            let form = CommutatorForm::from_rotation(&q).unwrap();
            let full = simplex_max(&form, &SimplexRegion::new(6, 0.0).unwrap(), &cfg).unwrap();
            let cut = simplex_max(&form, &SimplexRegion::new(6, 0.05).unwrap(), &cfg).unwrap();
            assert!(full.value <= 1e-7);
            assert!(full.value >= cut.value - 1e-8);
        }
    }

    #[test]
    fn solvers_agree_on_spectral_frames() {
        let cfg = SimplexConfig::default();
        for seed in 0..10 {
            let t = random_tuple(2, 2, SymmetryClass::Symmetric, seed, true).unwrap();
            let frame = spectral_frame(&vectorize(&t).unwrap()).unwrap();
            let form = CommutatorForm::from_rotation(&frame.q).unwrap();
            let best = simplex_max(&form, &SimplexRegion::new(3, 0.0).unwrap(), &cfg).unwrap();
            assert!((best.gradient_value - best.oracle_value.unwrap()).abs() <= 1e-6);
        }
    }
}
