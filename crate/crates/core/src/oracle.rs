//! Independent numerical maximizer of `ln det(I + W R)` over the constraint
//! set: projected gradient ascent with Dykstra projections onto the
//! intersection of the PSD cone, the trace half-space, and the diagonal box.
//!
//! The oracle validates the closed-form solvers and covers every case they
//! do not (rank-deficient grams, rank-deficient optima). It is deterministic
//! given the seed; seed 0 starts at the isotropic feasible point `P* I`,
//! any other seed starts from a seeded random feasible covariance, which is
//! how the non-uniqueness of flat optima is exercised.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SolverError};
use crate::hermitian::{
    capacity_gradient, log_det_capacity, ChannelGram, HermitianMatrix, RANK_RTOL,
};
use crate::solvers::{
    ConstraintRegime, CovarianceSolution, PowerBudget, Provenance, PAC_ACTIVITY_TOL,
    TPC_ACTIVITY_TOL,
};
use crate::synth;

/// Projected-gradient norm below which a stalled iterate counts as converged.
pub const PG_NORM_TOL: f64 = 1e-8;

/// Consecutive flat iterations required before the gradient test runs.
const FLAT_STREAK: usize = 10;

/// Tuning knobs of the numerical solver. The defaults are the contract the
/// cross-validation suites run at.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub max_iterations: usize,
    /// Trial step at the first iteration (later iterations start from a
    /// Barzilai-Borwein estimate, safeguarded by the same backtracking).
    pub initial_step: f64,
    /// Multiplier applied to the trial step on a rejected candidate.
    pub step_shrink: f64,
    /// Armijo sufficient-increase fraction.
    pub sufficient_increase: f64,
    /// Relative capacity increase below which an iteration counts as flat.
    pub convergence_tol: f64,
    pub dykstra_iterations: usize,
    /// Stop threshold on the Dykstra state displacement per cycle.
    pub dykstra_tol: f64,
    /// 0 starts at `P* I`; anything else seeds a random feasible start.
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            initial_step: 1.0,
            step_shrink: 0.5,
            sufficient_increase: 1e-4,
            convergence_tol: 1e-10,
            dykstra_iterations: 500,
            dykstra_tol: 1e-12,
            seed: 0,
        }
    }
}

impl OracleConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.dykstra_iterations == 0 {
            return Err(SolverError::InvalidInput(
                "iteration caps must be at least 1".into(),
            ));
        }
        let positives = [
            self.initial_step,
            self.step_shrink,
            self.sufficient_increase,
            self.convergence_tol,
            self.dykstra_tol,
        ];
        if positives.iter().any(|&v| !v.is_finite() || v <= 0.0) {
            return Err(SolverError::InvalidInput(
                "oracle tolerances and steps must be finite and positive".into(),
            ));
        }
        if self.step_shrink >= 1.0 {
            return Err(SolverError::InvalidInput(
                "step_shrink must be below 1".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a numerical solve.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub solution: CovarianceSolution,
    pub iterations_used: usize,
    pub converged: bool,
    /// Capacity after every accepted iteration; nondecreasing.
    pub capacity_trace: Option<Vec<f64>>,
}

/// Nonnegative multipliers fitted to the stationarity condition at a
/// (near-)optimal covariance, with the remaining residual.
#[derive(Debug, Clone)]
pub struct MultiplierEstimate {
    pub lambda: f64,
    pub lambda_i: DVector<f64>,
    pub stationarity_residual: f64,
}

fn regime_sets(regime: ConstraintRegime) -> (bool, bool) {
    // (trace half-space, diagonal box)
    match regime {
        ConstraintRegime::TpcOnly => (true, false),
        ConstraintRegime::PacOnly => (false, true),
        ConstraintRegime::Joint => (true, true),
    }
}

fn project_psd(y: &HermitianMatrix) -> HermitianMatrix {
    let eig = y.eigensystem();
    if eig.eigenvalues()[y.dim() - 1] >= 0.0 {
        y.clone()
    } else {
        eig.map_reconstruct(|l| l.max(0.0))
    }
}

fn project_diag_box(y: &HermitianMatrix, p_antenna: f64) -> HermitianMatrix {
    let diag = y.diagonal_real();
    if diag.iter().all(|&d| d <= p_antenna) {
        y.clone()
    } else {
        let clipped = diag.map(|d| d.min(p_antenna));
        y.with_real_diagonal(&clipped)
    }
}

fn project_trace_halfspace(y: &HermitianMatrix, p_total: f64) -> HermitianMatrix {
    let excess = y.trace() - p_total;
    if excess <= 0.0 {
        y.clone()
    } else {
        y - &HermitianMatrix::scaled_identity(y.dim(), excess / y.dim() as f64)
    }
}

/// Euclidean (Frobenius) projection onto the feasible set of the regime,
/// computed with Dykstra's alternating projections at the default budget
/// of cycles and tolerance.
pub fn project_feasible(
    r: &HermitianMatrix,
    budget: &PowerBudget,
    regime: ConstraintRegime,
) -> Result<HermitianMatrix> {
    let cfg = OracleConfig::default();
    project_with(r, budget, regime, cfg.dykstra_iterations, cfg.dykstra_tol)
}

/// Dykstra's algorithm over the regime's elementary sets.
///
/// Convergence is declared on the displacement of the full state (iterate
/// plus correction matrices) over one cycle: the iterate alone can sit still
/// for many cycles while the corrections are still moving, and stopping
/// there would return a feasible point that is not the projection.
fn project_with(
    r: &HermitianMatrix,
    budget: &PowerBudget,
    regime: ConstraintRegime,
    max_cycles: usize,
    tol: f64,
) -> Result<HermitianMatrix> {
    let (use_trace, use_box) = regime_sets(regime);
    let m = r.dim();
    // Set order: PSD cone, diagonal box, trace half-space.
    let n_sets = 1 + usize::from(use_box) + usize::from(use_trace);
    let mut corrections = vec![HermitianMatrix::zeros(m); n_sets];
    let mut x = r.clone();

    for _cycle in 0..max_cycles {
        let x_prev = x.clone();
        let mut correction_shift = 0.0;
        let mut set_index = 0;

        let apply = |x: &mut HermitianMatrix,
                     corrections: &mut Vec<HermitianMatrix>,
                     idx: usize,
                     proj: &dyn Fn(&HermitianMatrix) -> HermitianMatrix| {
            let y = &*x + &corrections[idx];
            let projected = proj(&y);
            let new_corr = &y - &projected;
            let shift = (&new_corr - &corrections[idx]).frobenius_norm();
            corrections[idx] = new_corr;
            *x = projected;
            shift
        };

        correction_shift += apply(&mut x, &mut corrections, set_index, &project_psd);
        set_index += 1;
        if use_box {
            let p = budget.p_antenna();
            correction_shift += apply(&mut x, &mut corrections, set_index, &move |y| {
                project_diag_box(y, p)
            });
            set_index += 1;
        }
        if use_trace {
            let pt = budget.p_total();
            correction_shift += apply(&mut x, &mut corrections, set_index, &move |y| {
                project_trace_halfspace(y, pt)
            });
        }

        let displacement = (&x - &x_prev).frobenius_norm() + correction_shift;
        if displacement <= tol {
            return Ok(x);
        }
    }
    Err(SolverError::ProjectionFailure {
        iterations: max_cycles,
        last_iterate: Box::new(x),
    })
}

/// Real Frobenius inner product on the Hermitian vector space.
fn re_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries().iter())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

fn projected_gradient_norm(
    r: &HermitianMatrix,
    gradient: &HermitianMatrix,
    budget: &PowerBudget,
    regime: ConstraintRegime,
    cfg: &OracleConfig,
) -> Option<f64> {
    let trial = r + gradient;
    project_with(
        &trial,
        budget,
        regime,
        cfg.dykstra_iterations,
        cfg.dykstra_tol,
    )
    .ok()
    .map(|projected| (&projected - r).frobenius_norm())
}

fn initial_point(
    w: &ChannelGram,
    budget: &PowerBudget,
    regime: ConstraintRegime,
    cfg: &OracleConfig,
) -> Result<HermitianMatrix> {
    let m = w.dim();
    let p_star = match regime {
        ConstraintRegime::Joint => budget.p_star(m),
        ConstraintRegime::TpcOnly => budget.p_total() / m as f64,
        ConstraintRegime::PacOnly => budget.p_antenna(),
    };
    if cfg.seed == 0 {
        return Ok(HermitianMatrix::scaled_identity(m, p_star));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let raw = synth::random_psd(m, &mut rng);
    let scale = p_star * m as f64 / raw.trace().max(1e-300);
    project_with(
        &(&raw * scale),
        budget,
        regime,
        cfg.dykstra_iterations,
        cfg.dykstra_tol,
    )
}

/// Maximizes `ln det(I + W R)` over the regime's feasible set.
///
/// Monotone ascent: every accepted candidate satisfies the Armijo
/// sufficient-increase test along the projection arc, so the capacity trace
/// is nondecreasing. Convergence is declared once the relative capacity
/// increase stays below `convergence_tol` for ten consecutive iterations
/// *and* the projected-gradient norm drops below [`PG_NORM_TOL`]; hitting
/// the iteration cap instead reports `converged = false` and leaves the
/// decision to the caller.
///
/// Some channels have non-unique optima (flat directions of the objective
/// inside the feasible set). There the returned covariance depends on the
/// starting point, i.e. on `cfg.seed`; only its feasibility and capacity
/// are contractual.
pub fn oracle_solve(
    w: &ChannelGram,
    budget: &PowerBudget,
    regime: ConstraintRegime,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    cfg.validate()?;
    let mut r = initial_point(w, budget, regime, cfg)?;
    let mut f = log_det_capacity(w, &r)?;
    let mut gradient = capacity_gradient(w, &r)?;
    let mut trace_log = vec![f];
    let mut previous: Option<(HermitianMatrix, HermitianMatrix)> = None;
    let mut flat_streak = 0usize;
    let mut converged = false;
    let mut iterations_used = 0usize;

    while iterations_used < cfg.max_iterations {
        iterations_used += 1;

        let mut step = match &previous {
            None => cfg.initial_step,
            Some((r_prev, g_prev)) => {
                // Barzilai-Borwein trial step; the objective is concave so
                // <s, y> <= 0 and the ratio is nonnegative.
                let s = &r - r_prev;
                let y = &gradient - g_prev;
                let ss = re_inner(&s, &s);
                let sy = -re_inner(&s, &y);
                if sy.is_finite() && sy > 1e-300 && ss.is_finite() {
                    (ss / sy).clamp(1e-12, 1e12)
                } else {
                    cfg.initial_step
                }
            }
        };

        let mut accepted: Option<(HermitianMatrix, f64)> = None;
        for _ in 0..130 {
            let trial = &r + &(&gradient * step);
            let candidate = match project_with(
                &trial,
                budget,
                regime,
                cfg.dykstra_iterations,
                cfg.dykstra_tol,
            ) {
                Ok(c) => c,
                Err(_) => {
                    // A stalled projection on an aggressive trial step is not
                    // fatal; retry closer to the current iterate.
                    step *= cfg.step_shrink;
                    continue;
                }
            };
            let direction = &candidate - &r;
            let movement = direction.frobenius_norm();
            if movement <= 1e-14 * (1.0 + r.frobenius_norm()) {
                // The projection pinned the iterate; smaller steps only pin
                // harder, so stop searching.
                break;
            }
            let gain = re_inner(&gradient, &direction);
            if let Ok(f_candidate) = log_det_capacity(w, &candidate) {
                if f_candidate.is_finite()
                    && gain >= 0.0
                    && f_candidate >= f + cfg.sufficient_increase * gain
                {
                    accepted = Some((candidate, f_candidate));
                    break;
                }
            }
            step *= cfg.step_shrink;
        }

        match accepted {
            Some((candidate, f_candidate)) => {
                let increase = f_candidate - f;
                let r_old = std::mem::replace(&mut r, candidate);
                let g_old = std::mem::replace(&mut gradient, capacity_gradient(w, &r)?);
                previous = Some((r_old, g_old));
                f = f_candidate;
                trace_log.push(f);
                if increase <= cfg.convergence_tol * (1.0 + f.abs()) {
                    flat_streak += 1;
                } else {
                    flat_streak = 0;
                }
                if flat_streak >= FLAT_STREAK {
                    match projected_gradient_norm(&r, &gradient, budget, regime, cfg) {
                        Some(pg) if pg < PG_NORM_TOL => {
                            converged = true;
                            break;
                        }
                        _ => flat_streak = 0,
                    }
                }
            }
            None => {
                // Either the projection pinned the iterate or no step size
                // yields sufficient increase: measure the projected gradient
                // and stop.
                if let Some(pg) = projected_gradient_norm(&r, &gradient, budget, regime, cfg) {
                    converged = pg < PG_NORM_TOL;
                }
                break;
            }
        }
    }

    let solution = assemble_solution(w, budget, regime, r, f);
    Ok(OracleResult {
        solution,
        iterations_used,
        converged,
        capacity_trace: Some(trace_log),
    })
}

fn assemble_solution(
    w: &ChannelGram,
    budget: &PowerBudget,
    regime: ConstraintRegime,
    r: HermitianMatrix,
    capacity: f64,
) -> CovarianceSolution {
    let m = w.dim();
    // Estimate multipliers against a budget where the constraints absent
    // from the regime are strictly slack.
    let estimate_budget = crate::solvers::regime_budget(budget, regime, m);
    let estimate = multiplier_estimate(w, &estimate_budget, &r);
    let diag = r.diagonal_real();
    let trace = r.trace();
    let (lambda, lambda_i) = match regime {
        ConstraintRegime::TpcOnly => (estimate.lambda, DVector::zeros(m)),
        ConstraintRegime::PacOnly => (0.0, estimate.lambda_i),
        ConstraintRegime::Joint => (estimate.lambda, estimate.lambda_i),
    };
    let tpc_active = match regime {
        ConstraintRegime::PacOnly => false,
        _ => (trace - budget.p_total()).abs() <= TPC_ACTIVITY_TOL,
    };
    let pac_active = match regime {
        ConstraintRegime::TpcOnly => vec![false; m],
        _ => diag
            .iter()
            .map(|&d| (d - budget.p_antenna()).abs() <= PAC_ACTIVITY_TOL)
            .collect(),
    };
    CovarianceSolution {
        r,
        capacity,
        lambda,
        lambda_i,
        tpc_active,
        pac_active,
        provenance: Provenance::NumericalOracle,
    }
}

/// Real vectorization of a k x k Hermitian matrix that preserves the
/// Frobenius norm: real diagonal, then sqrt(2)-scaled real and imaginary
/// parts of the upper triangle.
fn vectorize_hermitian(a: &DMatrix<Complex64>) -> DVector<f64> {
    let k = a.nrows();
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        out.push(a[(i, i)].re);
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..k {
        for j in (i + 1)..k {
            out.push(sqrt2 * a[(i, j)].re);
            out.push(sqrt2 * a[(i, j)].im);
        }
    }
    DVector::from_vec(out)
}

/// Fits nonnegative multipliers `(lambda, lambda_i)` to the stationarity
/// condition at a feasible, near-optimal covariance.
///
/// The stationarity equation restricted to the range of `R` is free of the
/// PSD-cone multiplier `M` (complementary slackness forces `M R = 0`), so
/// the fit minimizes the range-compressed residual
/// `|| U+^H (lambda I + Lambda - G) U+ ||_F` over the multipliers that
/// complementary slackness allows to be nonzero: `lambda` only when the
/// trace is tight, `lambda_i` only on antennas at the per-antenna bound.
pub fn multiplier_estimate(
    w: &ChannelGram,
    budget: &PowerBudget,
    r: &HermitianMatrix,
) -> MultiplierEstimate {
    let m = w.dim();
    let zero = MultiplierEstimate {
        lambda: 0.0,
        lambda_i: DVector::zeros(m),
        stationarity_residual: f64::INFINITY,
    };
    let gradient = match capacity_gradient(w, r) {
        Ok(g) => g,
        Err(_) => return zero,
    };
    let eig = r.eigensystem();
    let top = eig.eigenvalues()[0].max(0.0);
    let rank_tol = RANK_RTOL * top;
    let k = eig.eigenvalues().iter().filter(|&&l| l > rank_tol).count();
    if k == 0 {
        return MultiplierEstimate {
            stationarity_residual: 0.0,
            ..zero
        };
    }

    let basis = eig.eigenvectors().columns(0, k).into_owned();
    let target = vectorize_hermitian(&(basis.adjoint() * gradient.entries() * &basis));

    let activity_tol = 1e-6;
    let diag = r.diagonal_real();
    let tpc_tight = budget.p_total() - r.trace() <= activity_tol * (1.0 + budget.p_total());
    let tight_antennas: Vec<usize> = (0..m)
        .filter(|&i| budget.p_antenna() - diag[i] <= activity_tol * (1.0 + budget.p_antenna()))
        .collect();

    // Design columns: identity for lambda, U+^H e_i e_i^T U+ per tight PAC.
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut labels: Vec<Option<usize>> = Vec::new(); // None = lambda
    if tpc_tight {
        columns.push(vectorize_hermitian(&DMatrix::identity(k, k)));
        labels.push(None);
    }
    for &i in &tight_antennas {
        let v = basis.adjoint().column(i).into_owned();
        columns.push(vectorize_hermitian(&(&v * v.adjoint())));
        labels.push(Some(i));
    }

    let mut lambda = 0.0;
    let mut lambda_i = DVector::zeros(m);
    if columns.is_empty() {
        let residual = target.norm();
        return MultiplierEstimate {
            lambda,
            lambda_i,
            stationarity_residual: residual,
        };
    }

    // Nonnegative least squares by support shrinking: solve the
    // unconstrained fit, drop the most negative variable, repeat.
    let mut support: Vec<usize> = (0..columns.len()).collect();
    let mut fitted = vec![0.0; columns.len()];
    while !support.is_empty() {
        let design = DMatrix::from_columns(
            &support
                .iter()
                .map(|&j| columns[j].clone())
                .collect::<Vec<_>>(),
        );
        let svd = design.clone().svd(true, true);
        let s_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let solution = match svd.solve(&target, (1e-12 * s_max).max(1e-300)) {
            Ok(x) => x,
            Err(_) => break,
        };
        let worst = support
            .iter()
            .enumerate()
            .filter(|&(pos, _)| solution[pos] < -1e-12)
            .min_by(|a, b| solution[a.0].total_cmp(&solution[b.0]))
            .map(|(pos, _)| pos);
        match worst {
            Some(pos) => {
                support.remove(pos);
            }
            None => {
                for (pos, &j) in support.iter().enumerate() {
                    fitted[j] = solution[pos].max(0.0);
                }
                break;
            }
        }
    }

    for (j, label) in labels.iter().enumerate() {
        match label {
            None => lambda = fitted[j],
            Some(i) => lambda_i[*i] = fitted[j],
        }
    }

    let mut deficit = target;
    for (j, col) in columns.iter().enumerate() {
        deficit -= col * fitted[j];
    }
    MultiplierEstimate {
        lambda,
        lambda_i,
        stationarity_residual: deficit.norm(),
    }
}
