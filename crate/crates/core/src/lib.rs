//! Capacity and optimal transmit covariance of a fixed Gaussian MIMO channel
//! under total (TPC), per-antenna (PAC), and joint power constraints.
//!
//! The crate has three layers:
//!
//! - [`hermitian`]: exact-shape Hermitian types, the channel gram `W = H^H H`
//!   with cached spectral data, and the log-det capacity objective;
//! - [`solvers`]: the closed-form solutions (water-filling under the TPC,
//!   the PAC-only full-rank form, the joint full-rank form with its
//!   multiplier bisection and classification procedure) plus a KKT verifier;
//! - [`oracle`]: an independent projected-gradient maximizer over the same
//!   feasible sets, used to validate the closed forms and to solve the
//!   rank-deficient cases they do not cover.
//!
//! Capacities are always in nats. All types are immutable after
//! construction and all operations are pure functions.

pub mod error;
pub mod hermitian;
pub mod oracle;
pub mod solvers;
pub mod synth;

pub use error::{Result, SolverError};
pub use hermitian::{
    capacity_gradient, diag_split, gram_from_channel, log_det_capacity, positive_part, ChannelGram,
    Eigensystem, HermitianMatrix,
};
pub use oracle::{
    multiplier_estimate, oracle_solve, project_feasible, MultiplierEstimate, OracleConfig,
    OracleResult,
};
pub use solvers::{
    activity_report, bisect_lambda, classify_full_rank, joint_fullrank, kkt_check, pac_fullrank,
    regime_budget, solve, waterfill_tpc, ConstraintRegime, CovarianceSolution, KktReport,
    PowerBudget, Provenance, RankClassification,
};
