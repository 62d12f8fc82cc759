//! Cross-module invariants: spectral identities, solver feasibility,
//! multiplier bounds, regime ordering, and KKT sufficiency.

use mimocap_core::solvers::{PAC_ACTIVITY_TOL, TPC_ACTIVITY_TOL};
use mimocap_core::synth;
use mimocap_core::*;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_part_idempotent(seed in 0u64..1 << 20, dim in 1usize..6) {
        let mut rng = synth::rng(seed);
        let a = synth::random_hermitian(dim, &mut rng);
        let p = positive_part(&a);
        let pp = positive_part(&p);
        prop_assert!((&pp - &p).frobenius_norm() <= 1e-10 * (1.0 + p.frobenius_norm()));
    }

    #[test]
    fn positive_part_sign_decomposition(seed in 0u64..1 << 20, dim in 1usize..6) {
        let mut rng = synth::rng(seed);
        let a = synth::random_hermitian(dim, &mut rng);
        let plus = positive_part(&a);
        let minus = positive_part(&(&a * -1.0));
        let recomposed = &plus - &minus;
        prop_assert!(
            (&recomposed - &a).frobenius_norm() <= 1e-10 * (1.0 + a.frobenius_norm())
        );
    }

    #[test]
    fn positive_part_commutes_with_input(seed in 0u64..1 << 20, dim in 1usize..6) {
        let mut rng = synth::rng(seed);
        let a = synth::random_hermitian(dim, &mut rng);
        let p = positive_part(&a);
        let forward = a.entries() * p.entries();
        let backward = p.entries() * a.entries();
        prop_assert!((forward - backward).norm() <= 1e-10 * (1.0 + a.frobenius_norm()));
    }

    #[test]
    fn capacity_monotone_in_psd_order(seed in 0u64..1 << 20, dim in 1usize..6) {
        let mut rng = synth::rng(seed);
        let w = synth::random_pd_gram(dim, 20.0, &mut rng);
        let r1 = synth::random_psd(dim, &mut rng);
        let r2 = &r1 + &synth::random_psd(dim, &mut rng);
        let c1 = log_det_capacity(&w, &r1).unwrap();
        let c2 = log_det_capacity(&w, &r2).unwrap();
        prop_assert!(c2 >= c1 - 1e-12);
    }

    #[test]
    fn diag_split_recomposes(seed in 0u64..1 << 20, dim in 1usize..7) {
        let mut rng = synth::rng(seed);
        let a = synth::random_hermitian(dim, &mut rng);
        let (d, offd) = diag_split(&a);
        let sum = &d + &offd;
        prop_assert_eq!(sum.entries(), a.entries());
    }
}

fn feasibility_invariants(sol: &CovarianceSolution, budget: &PowerBudget) {
    let eig = sol.r.eigensystem();
    let top = eig.eigenvalues()[0].max(0.0);
    assert!(
        eig.eigenvalues()[sol.r.dim() - 1] >= -1e-9 * top,
        "solution not PSD within tolerance"
    );
    assert!(sol.r.trace() <= budget.p_total() + 1e-9);
    for d in sol.r.diagonal_real().iter() {
        assert!(*d <= budget.p_antenna() + 1e-9);
    }
}

#[test]
fn joint_closed_form_invariants() {
    let mut rng = synth::rng(101);
    for trial in 0..40 {
        let m = 2 + trial % 5;
        let (w, budget) = synth::random_fullrank_instance(m, &mut rng);
        let sol = joint_fullrank(&w, &budget).unwrap();
        feasibility_invariants(&sol, &budget);

        // Multiplier bracket: active TPC gives 0 < lambda < lambda_m(W);
        // m P <= P_T gives lambda = 0 and every antenna pinned at P.
        if m as f64 * budget.p_antenna() <= budget.p_total() {
            assert_eq!(sol.lambda, 0.0);
            for d in sol.r.diagonal_real().iter() {
                assert!((d - budget.p_antenna()).abs() <= PAC_ACTIVITY_TOL);
            }
            assert!(sol.pac_active.iter().all(|&a| a));
        } else {
            assert!(sol.lambda > 0.0 && sol.lambda < w.lambda_min());
            assert!((sol.r.trace() - budget.p_total()).abs() <= TPC_ACTIVITY_TOL);
        }

        // Off-diagonal identity: offdiag(R*) = -offdiag(W^{-1}) exactly.
        let (_, r_offd) = diag_split(&sol.r);
        let (_, winv_offd) = diag_split(w.inverse().unwrap());
        assert_eq!((&r_offd + &winv_offd).frobenius_norm(), 0.0);

        // Closed-form capacity agrees with the log-det evaluation.
        let direct = log_det_capacity(&w, &sol.r).unwrap();
        assert!(
            (sol.capacity - direct).abs() <= 1e-9,
            "capacity formula mismatch: {} vs {}",
            sol.capacity,
            direct
        );

        // Every closed-form solution satisfies its own KKT system.
        let report = kkt_check(&w, &budget, &sol);
        assert!(report.pass, "KKT failed on trial {trial}: {report:?}");

        // The two algebraic forms of the full-rank solution agree:
        // min(P I, l^-1 I - D(W^-1)) - offd(W^-1)
        //   == l^-1 I - W^-1 - ((l^-1 - P) I - D(W^-1))_+ .
        if sol.lambda > 0.0 {
            let inv = w.inverse().unwrap();
            let inv_level = 1.0 / sol.lambda;
            let (inv_d, _) = diag_split(inv);
            let correction = positive_part(
                &(&HermitianMatrix::scaled_identity(m, inv_level - budget.p_antenna()) - &inv_d),
            );
            let wf_part = &HermitianMatrix::scaled_identity(m, inv_level) - inv;
            let alternative = &wf_part - &correction;
            assert!(
                (&alternative - &sol.r).frobenius_norm() <= 1e-9 * (1.0 + sol.r.frobenius_norm()),
                "the two closed-form expressions disagree on trial {trial}"
            );
        }
    }
}

#[test]
fn diagonal_channel_decomposition() {
    // Orthogonal channel: R* is diagonal with entries
    // min(P, lambda^{-1} - 1/w_i), the elementwise min of the PAC-only and
    // TPC-only diagonal solutions evaluated at the same lambda.
    let mut rng = synth::rng(103);
    for trial in 0..25 {
        let m = 2 + trial % 4;
        let w = synth::random_diagonal_gram(m, 0.3, 3.0, &mut rng);
        let p = (0.5 + 2.0 * rng.random::<f64>()) / w.lambda_min();
        let ratio = 0.4 + 1.2 * rng.random::<f64>();
        let budget = PowerBudget::new(ratio * m as f64 * p, p).unwrap();
        let sol = match classify_full_rank(&w, &budget) {
            RankClassification::FullRank { .. } => joint_fullrank(&w, &budget).unwrap(),
            RankClassification::RankDeficient { .. } => continue,
        };
        let (_, offd) = diag_split(&sol.r);
        assert_eq!(offd.frobenius_norm(), 0.0, "R* must be diagonal");
        let w_diag = w.matrix().diagonal_real();
        for i in 0..m {
            let tpc_branch = if sol.lambda > 0.0 {
                1.0 / sol.lambda - 1.0 / w_diag[i]
            } else {
                f64::INFINITY
            };
            let expected = p.min(tpc_branch);
            assert!(
                (sol.r.get(i, i).re - expected).abs() <= 1e-10,
                "diagonal entry {i} mismatch"
            );
        }
    }
}

#[test]
fn regime_ordering_full_rank_instances() {
    let mut rng = synth::rng(107);
    for trial in 0..15 {
        let m = 2 + trial % 4;
        let (w, budget) = synth::random_fullrank_instance(m, &mut rng);
        let c_joint = solve(&w, &budget, ConstraintRegime::Joint)
            .unwrap()
            .capacity;
        let c_tpc = solve(&w, &budget, ConstraintRegime::TpcOnly)
            .unwrap()
            .capacity;
        let c_pac = solve(&w, &budget, ConstraintRegime::PacOnly)
            .unwrap()
            .capacity;
        let iso = HermitianMatrix::scaled_identity(m, budget.p_star(m));
        let c_iso = log_det_capacity(&w, &iso).unwrap();
        assert!(
            c_joint <= c_tpc.min(c_pac) + 1e-8,
            "joint above a relaxation"
        );
        assert!(c_joint >= c_iso - 1e-8, "joint below the isotropic point");
    }
}

#[test]
fn regime_ordering_rank_deficient_channel() {
    // W = diag{1, 0} forces the oracle on the joint and PAC paths.
    let w = ChannelGram::new(HermitianMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap();
    let budget = PowerBudget::new(2.0, 1.0).unwrap();
    let c_joint = solve(&w, &budget, ConstraintRegime::Joint).unwrap();
    assert_eq!(c_joint.provenance, Provenance::NumericalOracle);
    assert!((c_joint.capacity - 2.0_f64.ln()).abs() <= 1e-6);
    let c_tpc = solve(&w, &budget, ConstraintRegime::TpcOnly)
        .unwrap()
        .capacity;
    let c_pac = solve(&w, &budget, ConstraintRegime::PacOnly)
        .unwrap()
        .capacity;
    assert!(c_joint.capacity <= c_tpc.min(c_pac) + 1e-8);
    let iso = HermitianMatrix::scaled_identity(2, budget.p_star(2));
    let c_iso = log_det_capacity(&w, &iso).unwrap();
    assert!(c_joint.capacity >= c_iso - 1e-8);
}

#[test]
fn kkt_pass_implies_oracle_capacity() {
    // Convexity makes the KKT system sufficient: any solution that passes
    // must carry the optimal capacity, which the oracle reproduces.
    let mut rng = synth::rng(109);
    for trial in 0..8 {
        let m = 2 + trial % 4;
        let (w, budget) = synth::random_fullrank_instance(m, &mut rng);
        let sol = joint_fullrank(&w, &budget).unwrap();
        let report = kkt_check(&w, &budget, &sol);
        assert!(report.pass);
        let oracle = oracle_solve(
            &w,
            &budget,
            ConstraintRegime::Joint,
            &OracleConfig::default(),
        )
        .unwrap();
        assert!(
            oracle.converged,
            "oracle failed to converge on trial {trial}"
        );
        assert!(
            (oracle.solution.capacity - sol.capacity).abs() <= 1e-6 * (1.0 + sol.capacity.abs()),
            "oracle capacity {} vs closed form {}",
            oracle.solution.capacity,
            sol.capacity
        );
    }
}

#[test]
fn oracle_solutions_satisfy_relaxed_kkt() {
    let mut rng = synth::rng(113);
    for trial in 0..6 {
        let m = 2 + trial % 3;
        let (w, budget) = synth::random_fullrank_instance(m, &mut rng);
        let result = oracle_solve(
            &w,
            &budget,
            ConstraintRegime::Joint,
            &OracleConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        feasibility_invariants(&result.solution, &budget);
        let report = kkt_check(&w, &budget, &result.solution);
        assert!(
            report.passes_at(1e-5),
            "relaxed KKT failed on trial {trial}: max residual {}",
            report.max_residual()
        );
    }
}

#[test]
fn waterfill_matches_oracle_under_tpc_only() {
    let mut rng = synth::rng(127);
    for trial in 0..6 {
        let w = synth::random_pd_gram(4, 30.0, &mut rng);
        let closed = waterfill_tpc(&w, 10.0).unwrap();
        let budget = PowerBudget::new(10.0, 10.0).unwrap();
        let result = oracle_solve(
            &w,
            &budget,
            ConstraintRegime::TpcOnly,
            &OracleConfig::default(),
        )
        .unwrap();
        assert!(result.converged);
        assert!(
            (result.solution.capacity - closed.capacity).abs() <= 1e-6 * (1.0 + closed.capacity),
            "trial {trial}: oracle {} vs water-filling {}",
            result.solution.capacity,
            closed.capacity
        );
    }
}
