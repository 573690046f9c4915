//! Randomized campaigns against the inequality: fuzzing, ratio-maximizing
//! gradient ascent toward the equality locus, and exhaustive enumeration of
//! small integer tuples as an independent oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inequality::{defect, sharp_constant};
use crate::matrix_core::{
    bracket, comm_norm_sum, norm_sum, random_tuple_with, Matrix, MatrixTuple, SymmetryClass,
};
use crate::normal_form::{detect, NormalFormKind, NormalFormResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub n: usize,
    pub m: usize,
    pub symmetry: SymmetryClass,
    pub trials: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub step_init: f64,
    pub tol_grad: f64,
    /// Keep `sum_r ||B_r||^2 = 1` along the ascent.
    pub normalize: bool,
    /// Tolerance handed to the normal-form detector.
    pub classify_tol: f64,
}

impl SearchConfig {
    pub fn new(n: usize, m: usize, symmetry: SymmetryClass) -> Self {
        Self {
            n,
            m,
            symmetry,
            trials: 64,
            seed: 0,
            max_iters: 5000,
            step_init: 0.1,
            tol_grad: 1e-11,
            normalize: true,
            classify_tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidParameter("n and m must be positive".into()));
        }
        if self.trials == 0 || self.max_iters == 0 {
            return Err(Error::InvalidParameter("trials and max_iters must be >= 1".into()));
        }
        if !self.step_init.is_finite() || self.step_init <= 0.0 {
            return Err(Error::InvalidParameter("step_init must be positive".into()));
        }
        Ok(())
    }

    /// Seed of trial `index`.
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.seed ^ index as u64
    }

    fn classifiable(&self) -> bool {
        match self.symmetry {
            SymmetryClass::Symmetric => true,
            SymmetryClass::SkewSymmetric => self.n >= 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub ratio: f64,
    pub defect: f64,
    pub scale: f64,
    pub kind: NormalFormKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    pub defect: f64,
    pub bound: f64,
    /// Offending tuple, row-major.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub trials: usize,
    /// Smallest `defect / max(1, bound)`.
    pub min_relative_defect: f64,
    pub min_defect: f64,
    pub max_ratio: f64,
    /// `1 - max_ratio`.
    pub min_gap: f64,
    /// Counts of ratios in ten equal bins over `[0, 1]` (the last bin is closed).
    pub histogram: [usize; 10],
    pub violations: Vec<Violation>,
    /// Trials the detector classified as an equality configuration.
    pub equality_claims: usize,
    /// Largest `defect / max(1, bound)` among those claims.
    pub max_claimed_relative_defect: f64,
    pub records: Vec<TrialRecord>,
}

/// Tolerance of the fuzz contract `defect >= -tol * max(1, bound)`.
pub const FUZZ_TOL: f64 = 1e-9;

pub fn fuzz_inequality(cfg: &SearchConfig) -> Result<FuzzSummary> {
    cfg.validate()?;
    let classify = cfg.classifiable();
    let outcomes: Vec<Result<(TrialRecord, Option<Violation>)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = cfg.trial_seed(trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tuple_with(cfg.n, cfg.m, cfg.symmetry, false, &mut rng)?;
            let report = defect(&t);
            let kind = if classify {
                detect(&t, cfg.classify_tol)?.kind
            } else {
                NormalFormKind::NotEquality
            };
            let violation = (report.defect < -FUZZ_TOL * report.scale()).then(|| Violation {
                trial,
                seed,
                defect: report.defect,
                bound: report.bound,
                matrices: t.to_rows(),
            });
            Ok((
                TrialRecord {
                    trial,
                    seed,
                    ratio: report.ratio,
                    defect: report.defect,
                    scale: report.scale(),
                    kind,
                },
                violation,
            ))
        })
        .collect();

    let mut summary = FuzzSummary {
        trials: cfg.trials,
        min_relative_defect: f64::INFINITY,
        min_defect: f64::INFINITY,
        max_ratio: 0.0,
        min_gap: 1.0,
        histogram: [0; 10],
        violations: Vec::new(),
        equality_claims: 0,
        max_claimed_relative_defect: 0.0,
        records: Vec::with_capacity(cfg.trials),
    };
    for outcome in outcomes {
        let (rec, violation) = outcome?;
        let rel = rec.defect / rec.scale;
        summary.min_relative_defect = summary.min_relative_defect.min(rel);
        summary.min_defect = summary.min_defect.min(rec.defect);
        summary.max_ratio = summary.max_ratio.max(rec.ratio);
        let bin = ((rec.ratio * 10.0).floor().max(0.0) as usize).min(9);
        summary.histogram[bin] += 1;
        if rec.kind.is_equality() {
            summary.equality_claims += 1;
            summary.max_claimed_relative_defect = summary.max_claimed_relative_defect.max(rel);
        }
        summary.violations.extend(violation);
        summary.records.push(rec);
    }
    summary.min_gap = 1.0 - summary.max_ratio;
    Ok(summary)
}

/// Euclidean gradient of `sum_{r,s} ||[B_r, B_s]||^2` with respect to each
/// `B_r`: `4 sum_s [[B_r, B_s], B_s^t]`.
pub fn lhs_gradient(t: &MatrixTuple) -> Vec<Matrix> {
    let mats = t.mats();
    mats.iter()
        .map(|br| {
            let mut g = Matrix::zeros(t.n(), t.n());
            for bs in mats {
                let c = bracket(br, bs);
                g += bracket(&c, &bs.transpose());
            }
            g * 4.0
        })
        .collect()
}

fn tuple_dot(a: &[Matrix], b: &[Matrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Gradient of `lhs / (k ns^2)` projected onto the symmetry class.
fn ratio_gradient(t: &MatrixTuple, constant: f64) -> Vec<Matrix> {
    let lhs = comm_norm_sum(t);
    let ns = norm_sum(t);
    let g_lhs = lhs_gradient(t);
    // d(ns)/dB_r = 2 B_r
    g_lhs
        .iter()
        .zip(t.mats())
        .map(|(gl, b)| {
            let g = (gl * ns - b * (4.0 * lhs)) / (constant * ns * ns * ns);
            t.symmetry().project(&g)
        })
        .collect()
}

fn ratio_of(t: &MatrixTuple, constant: f64) -> f64 {
    let ns = norm_sum(t);
    if ns == 0.0 || constant == 0.0 {
        0.0
    } else {
        comm_norm_sum(t) / (constant * ns * ns)
    }
}

fn normalized(t: &MatrixTuple) -> MatrixTuple {
    t.scaled(1.0 / norm_sum(t).sqrt())
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_ratio: f64,
    pub best_tuple: MatrixTuple,
    pub best_trial: usize,
    pub iterations: usize,
    pub converged: bool,
    pub classified: NormalFormResult,
    /// `(iteration, ratio)` after every accepted step of the best run.
    pub trajectory: Vec<(usize, f64)>,
    /// Final state of every trial, in trial order.
    pub trials: Vec<TrialRecord>,
}

struct Run {
    tuple: MatrixTuple,
    ratio: f64,
    iterations: usize,
    converged: bool,
    trajectory: Vec<(usize, f64)>,
}

fn run_ascent(cfg: &SearchConfig, start: MatrixTuple, constant: f64) -> Result<Run> {
    let mut t = if cfg.normalize { normalized(&start) } else { start };
    let mut ratio = ratio_of(&t, constant);
    let mut step = cfg.step_init;
    let mut trajectory = vec![(0, ratio)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let grad = ratio_gradient(&t, constant);
        let scale = norm_sum(&t).sqrt();
        // gradient of a degree-0 function scales like 1/|B|
        let gnorm = tuple_dot(&grad, &grad).sqrt() * scale;
        if !gnorm.is_finite() {
            return Err(Error::NonFinite(format!(
                "ratio gradient at iteration {iterations}"
            )));
        }
        if gnorm <= cfg.tol_grad {
            converged = true;
            break;
        }
        let mut accepted = false;
        while step * gnorm > 1e-16 {
            let mats = t
                .mats()
                .iter()
                .zip(&grad)
                .map(|(b, g)| b + g * (step * scale * scale))
                .collect();
            let mut trial = MatrixTuple::from_parts(t.symmetry(), mats);
            if cfg.normalize {
                trial = normalized(&trial);
            }
            let r = ratio_of(&trial, constant);
            if r > ratio {
                t = trial;
                ratio = r;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no representable ascent step left
            converged = true;
            break;
        }
        trajectory.push((iterations, ratio));
    }
    Ok(Run {
        tuple: t,
        ratio,
        iterations,
        converged,
        trajectory,
    })
}

/// Projected gradient ascent on `lhs / (k ns^2)` from `cfg.trials` random
/// starts, or from `start` alone when given. The best run is classified.
pub fn ascend_ratio(cfg: &SearchConfig, start: Option<&MatrixTuple>) -> Result<SearchResult> {
    cfg.validate()?;
    let constant = sharp_constant(cfg.n, cfg.symmetry);
    if constant == 0.0 {
        return Err(Error::Domain(format!(
            "the {} inequality is trivial at n = {}",
            cfg.symmetry, cfg.n
        )));
    }
    let starts: Vec<MatrixTuple> = match start {
        Some(s) => {
            if s.n() != cfg.n || s.m() != cfg.m || s.symmetry() != cfg.symmetry {
                return Err(Error::Dimension("start tuple does not match the config".into()));
            }
            if norm_sum(s) == 0.0 {
                return Err(Error::InvalidParameter("start tuple is zero".into()));
            }
            vec![s.clone()]
        }
        None => (0..cfg.trials)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.trial_seed(i));
                random_tuple_with(cfg.n, cfg.m, cfg.symmetry, false, &mut rng)
            })
            .collect::<Result<_>>()?,
    };
    let classify = cfg.classifiable();
    let runs: Vec<(Run, TrialRecord)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(trial, s)| {
            let run = run_ascent(cfg, s, constant)?;
            let report = defect(&run.tuple);
            let kind = if classify {
                detect(&run.tuple, cfg.classify_tol)?.kind
            } else {
                NormalFormKind::NotEquality
            };
            let record = TrialRecord {
                trial,
                seed: cfg.trial_seed(trial),
                ratio: run.ratio,
                defect: report.defect,
                scale: report.scale(),
                kind,
            };
            Ok((run, record))
        })
        .collect::<Result<_>>()?;
    let mut trials = Vec::with_capacity(runs.len());
    let mut best: Option<(usize, Run)> = None;
    for (i, (run, record)) in runs.into_iter().enumerate() {
        trials.push(record);
        if best.as_ref().is_none_or(|(_, b)| run.ratio > b.ratio) {
            best = Some((i, run));
        }
    }
    let (best_trial, best) = best.expect("at least one trial");
    let classified = if classify {
        detect(&best.tuple, cfg.classify_tol)?
    } else {
        NormalFormResult {
            kind: NormalFormKind::NotEquality,
            p: Matrix::identity(cfg.n, cfg.n),
            r: Matrix::identity(cfg.m, cfg.m),
            parameter: 0.0,
            residual: norm_sum(&best.tuple).sqrt(),
        }
    };
    Ok(SearchResult {
        best_ratio: best.ratio,
        best_tuple: best.tuple,
        best_trial,
        iterations: best.iterations,
        converged: best.converged,
        classified,
        trajectory: best.trajectory,
        trials,
    })
}

/// Largest number of tuples [`brute_oracle`] will enumerate.
pub const BRUTE_BUDGET: u128 = 10_000_000;

/// One enumerated tuple with the oracle's own arithmetic.
#[derive(Debug, Clone)]
pub struct Enumerated {
    pub tuple: MatrixTuple,
    pub lhs: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub max_ratio: f64,
    pub argmax: Option<MatrixTuple>,
    pub count: u128,
}

fn free_entries(n: usize, symmetry: SymmetryClass) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            if i == j && symmetry == SymmetryClass::SkewSymmetric {
                continue;
            }
            out.push((i, j));
        }
    }
    out
}

/// Plain nested-loop arithmetic on row-major arrays, independent of the
/// matrix library: returns `(sum_{r,s} ||[B_r,B_s]||^2, sum_r ||B_r||^2)`.
fn oracle_sums(mats: &[Vec<f64>], n: usize) -> (f64, f64) {
    let mut lhs = 0.0;
    for a in mats {
        for b in mats {
            for i in 0..n {
                for j in 0..n {
                    let mut c = 0.0;
                    for k in 0..n {
                        c += a[i * n + k] * b[k * n + j] - b[i * n + k] * a[k * n + j];
                    }
                    lhs += c * c;
                }
            }
        }
    }
    let ns = mats.iter().flatten().map(|v| v * v).sum();
    (lhs, ns)
}

/// Visits every tuple whose free entries are drawn from `grid`.
pub fn brute_enumerate<F>(
    n: usize,
    m: usize,
    symmetry: SymmetryClass,
    grid: &[f64],
    mut visit: F,
) -> Result<u128>
where
    F: FnMut(Enumerated),
{
    if n == 0 || m == 0 || grid.is_empty() {
        return Err(Error::InvalidParameter("n, m and the grid must be non-empty".into()));
    }
    let slots = free_entries(n, symmetry);
    let digits = slots.len() * m;
    let base = grid.len() as u128;
    let count = base
        .checked_pow(digits as u32)
        .filter(|&c| c <= BRUTE_BUDGET)
        .ok_or(Error::BudgetExceeded {
            count: base.saturating_pow(digits as u32),
            budget: BRUTE_BUDGET,
        })?;
    let constant = sharp_constant(n, symmetry);
    let sign = symmetry.transpose_sign();
    let mut counter = vec![0usize; digits];
    for _ in 0..count {
        let mut raw = vec![vec![0.0; n * n]; m];
        for (d, &g) in counter.iter().enumerate() {
            let (r, (i, j)) = (d / slots.len(), slots[d % slots.len()]);
            raw[r][i * n + j] = grid[g];
            raw[r][j * n + i] = sign * grid[g];
        }
        let (lhs, ns) = oracle_sums(&raw, n);
        let mats = raw.iter().map(|v| Matrix::from_row_slice(n, n, v)).collect();
        visit(Enumerated {
            tuple: MatrixTuple::from_parts(symmetry, mats),
            lhs,
            bound: constant * ns * ns,
        });
        for digit in counter.iter_mut() {
            *digit += 1;
            if *digit < grid.len() {
                break;
            }
            *digit = 0;
        }
    }
    Ok(count)
}

/// Exhaustive maximum of `lhs / bound` over grid tuples with `bound > 0`.
/// Ties keep the first tuple in enumeration order.
pub fn brute_oracle(
    n: usize,
    m: usize,
    symmetry: SymmetryClass,
    grid: &[f64],
) -> Result<OracleResult> {
    let mut max_ratio = 0.0;
    let mut argmax = None;
    let count = brute_enumerate(n, m, symmetry, grid, |e| {
        if e.bound > 0.0 {
            let ratio = e.lhs / e.bound;
            if ratio > max_ratio {
                max_ratio = ratio;
                argmax = Some(e.tuple);
            }
        }
    })?;
    Ok(OracleResult {
        max_ratio,
        argmax,
        count,
    })
}
