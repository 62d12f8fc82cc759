//! Closed-form capacity solvers for the three power-constraint regimes,
//! the total-power multiplier bisection, the full-rank classification
//! procedure, and the solver dispatch.
//!
//! The transmit covariance is optimized over one of three feasible sets:
//! `tr R <= P_T` (TPC only), `r_ii <= P` (PAC only), or their intersection
//! (joint). Closed forms cover the water-filling solution, the PAC-only
//! full-rank solution `P I - offdiag(W^{-1})`, and the joint full-rank
//! solution `min(P I, lambda^{-1} I - diag(W^{-1})) - offdiag(W^{-1})`;
//! everything else routes to the numerical oracle.

mod kkt;

pub use kkt::{activity_report, kkt_check, regime_budget, KktReport, KKT_TOL};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Result, SolverError};
use crate::hermitian::{diag_split, log_det_capacity, ChannelGram, HermitianMatrix};
use crate::oracle::{oracle_solve, OracleConfig};

/// Slackness tolerance for declaring the total power constraint active.
pub const TPC_ACTIVITY_TOL: f64 = 1e-8;

/// Slackness tolerance for declaring a per-antenna constraint active.
pub const PAC_ACTIVITY_TOL: f64 = 1e-9;

/// Relative margin on the smallest eigenvalue when testing a candidate
/// covariance for positive definiteness.
pub const PD_RTOL: f64 = 1e-10;

/// Relative tolerance on the bisection residual `|f(lambda) - P_T|`.
pub const BISECTION_RTOL: f64 = 1e-10;

/// Iteration cap for the multiplier bisection.
pub const BISECTION_MAX_ITERATIONS: usize = 200;

/// Total and per-antenna transmit power limits (power doubles as SNR since
/// the noise is unit-variance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBudget {
    p_total: f64,
    p_antenna: f64,
}

impl PowerBudget {
    /// Both powers must be finite and strictly positive (Slater's condition).
    pub fn new(p_total: f64, p_antenna: f64) -> Result<Self> {
        if !p_total.is_finite() || p_total <= 0.0 {
            return Err(SolverError::InvalidInput(format!(
                "p_total must be finite and positive, got {p_total}"
            )));
        }
        if !p_antenna.is_finite() || p_antenna <= 0.0 {
            return Err(SolverError::InvalidInput(format!(
                "p_antenna must be finite and positive, got {p_antenna}"
            )));
        }
        Ok(Self { p_total, p_antenna })
    }

    pub fn p_total(&self) -> f64 {
        self.p_total
    }

    pub fn p_antenna(&self) -> f64 {
        self.p_antenna
    }

    /// `P* = min(P, P_T / m)`: the isotropic power level feasible under the
    /// joint constraints for an `m`-antenna channel.
    pub fn p_star(&self, dim: usize) -> f64 {
        self.p_antenna.min(self.p_total / dim as f64)
    }
}

/// Which power constraints bound the feasible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintRegime {
    TpcOnly,
    PacOnly,
    Joint,
}

/// How a solution was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedFormWf,
    ClosedFormPac,
    ClosedFormJoint,
    NumericalOracle,
}

/// An optimal (or candidate) transmit covariance with its capacity,
/// Lagrange multipliers, and constraint-activity flags.
///
/// Activity flags are computed from constraint slackness
/// ([`TPC_ACTIVITY_TOL`], [`PAC_ACTIVITY_TOL`]) rather than from the
/// multipliers, so they stay meaningful for oracle solutions whose
/// multipliers are estimated.
#[derive(Debug, Clone)]
pub struct CovarianceSolution {
    /// Optimal transmit covariance (Hermitian PSD).
    pub r: HermitianMatrix,
    /// Capacity `ln det(I + W R)` in nats.
    pub capacity: f64,
    /// Multiplier of the total power constraint.
    pub lambda: f64,
    /// Multipliers of the per-antenna constraints.
    pub lambda_i: DVector<f64>,
    /// Whether the total power constraint holds with equality.
    pub tpc_active: bool,
    /// Whether each per-antenna constraint holds with equality.
    pub pac_active: Vec<bool>,
    pub provenance: Provenance,
}

impl CovarianceSolution {
    /// Per-antenna transmit powers (the diagonal of `R`).
    pub fn per_antenna_powers(&self) -> DVector<f64> {
        self.r.diagonal_real()
    }
}

/// Outcome of the full-rank classification procedure.
#[derive(Debug, Clone, PartialEq)]
pub enum RankClassification {
    /// The joint-constraint optimum is full-rank; carries the TPC multiplier
    /// used to build it.
    FullRank { lambda: f64 },
    /// The optimum is rank-deficient (or the channel gram is singular) and
    /// the closed form does not apply.
    RankDeficient { reason: String },
}

fn slack_tpc_active(trace: f64, p_total: f64) -> bool {
    (trace - p_total).abs() <= TPC_ACTIVITY_TOL
}

fn slack_pac_active(r_ii: f64, p_antenna: f64) -> bool {
    (r_ii - p_antenna).abs() <= PAC_ACTIVITY_TOL
}

fn pd_with_margin(r: &HermitianMatrix) -> bool {
    let eig = r.eigensystem();
    let top = eig.eigenvalues()[0];
    top > 0.0 && eig.eigenvalues()[r.dim() - 1] > PD_RTOL * top
}

/// Water-filling solution under the total power constraint only.
///
/// Pours `p_total` over the positive eigenmodes of `W` up to a common water
/// level; the TPC is always active except for the degenerate all-zero
/// channel, which returns the zero covariance with `tpc_active = false`.
pub fn waterfill_tpc(w: &ChannelGram, p_total: f64) -> Result<CovarianceSolution> {
    if !p_total.is_finite() || p_total <= 0.0 {
        return Err(SolverError::InvalidInput(format!(
            "p_total must be finite and positive, got {p_total}"
        )));
    }
    let m = w.dim();
    let k = w.rank();
    if k == 0 {
        return Ok(CovarianceSolution {
            r: HermitianMatrix::zeros(m),
            capacity: 0.0,
            lambda: 0.0,
            lambda_i: DVector::zeros(m),
            tpc_active: false,
            pac_active: vec![false; m],
            provenance: Provenance::ClosedFormWf,
        });
    }

    // Inverse gains 1/lambda_i(W) over positive modes, ascending because the
    // eigenvalues are sorted descending: strongest mode first.
    let gains = w.eigensystem().eigenvalues();
    let inv: Vec<f64> = (0..k).map(|i| 1.0 / gains[i]).collect();

    let mut active = k;
    let mut level;
    loop {
        let sum_inv: f64 = inv[..active].iter().sum();
        level = (p_total + sum_inv) / active as f64;
        if level > inv[active - 1] {
            break;
        }
        active -= 1;
    }

    let mut scaled = w
        .eigensystem()
        .eigenvectors()
        .columns(0, active)
        .into_owned();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        let p_i = Complex64::new(level - inv[i], 0.0);
        col.iter_mut().for_each(|z| *z *= p_i);
    }
    let basis = w
        .eigensystem()
        .eigenvectors()
        .columns(0, active)
        .into_owned();
    let r = HermitianMatrix::symmetrized(&scaled * basis.adjoint());

    let capacity: f64 = inv[..active].iter().map(|&v| (level / v).ln()).sum();
    Ok(CovarianceSolution {
        r,
        capacity,
        lambda: 1.0 / level,
        lambda_i: DVector::zeros(m),
        tpc_active: true,
        pac_active: vec![false; m],
        provenance: Provenance::ClosedFormWf,
    })
}

/// Full-rank solution under per-antenna constraints only:
/// `R* = P I - offdiag(W^{-1})`, every diagonal entry pinned at `P`.
///
/// Requires an invertible gram and `P` above the largest eigenvalue of
/// `offdiag(W^{-1})`; otherwise the optimum is not full-rank and the caller
/// should use the numerical oracle.
pub fn pac_fullrank(w: &ChannelGram, p_antenna: f64) -> Result<CovarianceSolution> {
    if !p_antenna.is_finite() || p_antenna <= 0.0 {
        return Err(SolverError::InvalidInput(format!(
            "p_antenna must be finite and positive, got {p_antenna}"
        )));
    }
    let inv = w
        .inverse()
        .ok_or_else(|| SolverError::NotFullRank("singular channel gram".into()))?;
    let m = w.dim();
    let (_, offd) = diag_split(inv);
    let r = &HermitianMatrix::scaled_identity(m, p_antenna) - &offd;
    if !pd_with_margin(&r) {
        let top = offd.eigensystem().eigenvalues()[0];
        return Err(SolverError::NotFullRank(format!(
            "p_antenna = {p_antenna} does not exceed lambda_1(offdiag(W^-1)) = {top}; \
             the optimum is rank-deficient, use the numerical oracle"
        )));
    }
    let capacity = log_det_capacity(w, &r)?;
    let inv_diag = inv.diagonal_real();
    let lambda_i = DVector::from_iterator(m, (0..m).map(|i| 1.0 / (p_antenna + inv_diag[i])));
    Ok(CovarianceSolution {
        r,
        capacity,
        lambda: 0.0,
        lambda_i,
        tpc_active: false,
        pac_active: vec![true; m],
        provenance: Provenance::ClosedFormPac,
    })
}

/// Left-hand side of the total-power equation:
/// `f(lambda) = sum_i min(P, lambda^{-1} - (W^{-1})_ii)`.
fn tpc_equation(inv_diag: &DVector<f64>, p_antenna: f64, lambda: f64) -> f64 {
    let inv_level = 1.0 / lambda;
    inv_diag.iter().map(|&v| p_antenna.min(inv_level - v)).sum()
}

/// Solves the total-power equation `f(lambda) = P_T` for the TPC multiplier
/// of the joint full-rank solution.
///
/// `f` is monotonically decreasing, so the root in `(0, lambda_m(W))` is
/// unique whenever it exists; the bracket endpoints come from dual
/// feasibility and the necessary full-rank conditions. The returned
/// multiplier satisfies `P_T - 1e-10 P_T <= f(lambda) <= P_T`: the residual
/// sits on the feasible side so the resulting trace never exceeds the
/// budget. Callers must handle `m P <= P_T` separately (there the TPC is
/// inactive and `lambda = 0`).
pub fn bisect_lambda(w: &ChannelGram, budget: &PowerBudget) -> Result<f64> {
    let inv_diag = w
        .inverse_diagonal()
        .ok_or_else(|| SolverError::InvalidInput("singular channel gram".into()))?;
    let m = w.dim() as f64;
    let p = budget.p_antenna();
    let p_total = budget.p_total();
    if m * p <= p_total {
        return Err(SolverError::InvalidInput(format!(
            "m P = {} <= P_T = {p_total}: the TPC is inactive and lambda = 0 by \
             convention; the bisection must not be called",
            m * p
        )));
    }

    let lambda_m = w.lambda_min();
    let eps = 1e-14 * lambda_m;
    let lo = eps;
    let hi = lambda_m - eps;
    let tol = BISECTION_RTOL * p_total;

    let g = |lambda: f64| tpc_equation(&inv_diag, p, lambda) - p_total;
    let g_lo = g(lo);
    let g_hi = g(hi);
    if g_lo < 0.0 || g_hi > 0.0 {
        return Err(SolverError::InfeasibleBracket {
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    if g_hi.abs() <= tol {
        return Ok(hi);
    }

    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..BISECTION_MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid);
        // Accept only from the feasible side (f <= P_T), so the covariance
        // built from the returned multiplier never overshoots the budget.
        if g_mid <= 0.0 && g_mid >= -tol {
            return Ok(mid);
        }
        if g_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g_hi = g(hi);
    if g_hi <= 0.0 && g_hi >= -tol {
        Ok(hi)
    } else {
        Err(SolverError::BisectionStalled {
            iterations: BISECTION_MAX_ITERATIONS,
        })
    }
}

/// Builds the candidate covariance `R(lambda)` of the joint full-rank form:
/// diagonal `min(P, lambda^{-1} - (W^{-1})_ii)`, off-diagonal the negated
/// off-diagonal of `W^{-1}`. `lambda = 0` means an inactive TPC, where the
/// diagonal is pinned at `P`.
fn joint_candidate(w: &ChannelGram, p_antenna: f64, lambda: f64) -> Result<HermitianMatrix> {
    let inv = w
        .inverse()
        .ok_or_else(|| SolverError::NotFullRank("singular channel gram".into()))?;
    let m = w.dim();
    let inv_diag = inv.diagonal_real();
    let diag = DVector::from_iterator(
        m,
        (0..m).map(|i| {
            if lambda > 0.0 {
                p_antenna.min(1.0 / lambda - inv_diag[i])
            } else {
                p_antenna
            }
        }),
    );
    let (_, offd) = diag_split(inv);
    Ok((&offd * -1.0).with_real_diagonal(&diag))
}

/// Closed-form full-rank solution under the joint constraints
/// (`R* = min(P I, lambda^{-1} I - diag(W^{-1})) - offdiag(W^{-1})`, the min
/// taken entrywise on the diagonal).
///
/// Precondition: [`classify_full_rank`] returned `FullRank`. The reported
/// capacity is the closed-form value
/// `ln|W| + sum_i ln min(lambda^{-1}, P + (W^{-1})_ii)`, cross-checked
/// against `ln det(I + W R*)` at build time.
pub fn joint_fullrank(w: &ChannelGram, budget: &PowerBudget) -> Result<CovarianceSolution> {
    let m = w.dim();
    let p = budget.p_antenna();
    let lambda = if m as f64 * p <= budget.p_total() {
        0.0
    } else {
        bisect_lambda(w, budget)?
    };
    let r = joint_candidate(w, p, lambda)?;
    if !pd_with_margin(&r) {
        return Err(SolverError::InternalInconsistency(
            "R(lambda) is not positive definite; classification should have \
             routed this instance to the oracle"
                .into(),
        ));
    }
    let inv_diag = w.inverse_diagonal().expect("checked full-rank above");
    let log_det_w = w.log_det().expect("checked full-rank above");
    let capacity: f64 = log_det_w
        + (0..m)
            .map(|i| {
                let pinned = p + inv_diag[i];
                if lambda > 0.0 {
                    (1.0 / lambda).min(pinned).ln()
                } else {
                    pinned.ln()
                }
            })
            .sum::<f64>();
    let direct = log_det_capacity(w, &r)?;
    if (capacity - direct).abs() > 1e-9 * (1.0 + capacity.abs()) {
        return Err(SolverError::InternalInconsistency(format!(
            "closed-form capacity {capacity} and ln det(I + W R) = {direct} disagree"
        )));
    }

    let lambda_i = DVector::from_iterator(
        m,
        inv_diag.iter().map(|&v| (1.0 / (p + v) - lambda).max(0.0)),
    );
    let diag = r.diagonal_real();
    let pac_active: Vec<bool> = diag.iter().map(|&d| slack_pac_active(d, p)).collect();
    let tpc_active = slack_tpc_active(r.trace(), budget.p_total());
    Ok(CovarianceSolution {
        r,
        capacity,
        lambda,
        lambda_i,
        tpc_active,
        pac_active,
        provenance: Provenance::ClosedFormJoint,
    })
}

/// Decides whether the joint-constraint optimum is full-rank.
///
/// Step 1 (`P_T >= m P`, TPC inactive): the optimum is full-rank iff
/// `R(0) = P I - offdiag(W^{-1})` is positive definite. Step 2 (`P_T < m P`):
/// solve the total-power equation for `lambda` and test `R(lambda) > 0`.
/// Any bisection failure or a singular gram classifies as rank-deficient.
pub fn classify_full_rank(w: &ChannelGram, budget: &PowerBudget) -> RankClassification {
    if !w.is_full_rank() {
        return RankClassification::RankDeficient {
            reason: "singular channel gram".into(),
        };
    }
    let m = w.dim() as f64;
    let p = budget.p_antenna();
    let lambda = if budget.p_total() >= m * p {
        0.0
    } else {
        match bisect_lambda(w, budget) {
            Ok(lambda) => lambda,
            Err(e) => {
                return RankClassification::RankDeficient {
                    reason: format!("multiplier bisection failed: {e}"),
                }
            }
        }
    };
    let candidate = joint_candidate(w, p, lambda).expect("full-rank gram");
    if pd_with_margin(&candidate) {
        RankClassification::FullRank { lambda }
    } else {
        RankClassification::RankDeficient {
            reason: "R(lambda) is not positive definite".into(),
        }
    }
}

/// Solves for the capacity-achieving covariance under the given regime,
/// using the closed forms where they apply and the numerical oracle
/// everywhere else.
pub fn solve(
    w: &ChannelGram,
    budget: &PowerBudget,
    regime: ConstraintRegime,
) -> Result<CovarianceSolution> {
    match regime {
        ConstraintRegime::TpcOnly => waterfill_tpc(w, budget.p_total()),
        ConstraintRegime::PacOnly => match pac_fullrank(w, budget.p_antenna()) {
            Ok(sol) => Ok(sol),
            Err(SolverError::NotFullRank(_)) => {
                let result = oracle_solve(w, budget, regime, &OracleConfig::default())?;
                Ok(result.solution)
            }
            Err(e) => Err(e),
        },
        ConstraintRegime::Joint => match classify_full_rank(w, budget) {
            RankClassification::FullRank { .. } => joint_fullrank(w, budget),
            RankClassification::RankDeficient { .. } => {
                let result = oracle_solve(w, budget, regime, &OracleConfig::default())?;
                Ok(result.solution)
            }
        },
    }
}
