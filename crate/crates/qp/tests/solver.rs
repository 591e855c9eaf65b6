mod common;

use common::oracle::{active_set_solve, brute_force_box, DenseQp};
use cotow_qp::{kkt_residuals, solve, AdmmSolver, QpError, SolveStatus, SolverSettings, SparseQP, INFTY};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_sparse(d: &DenseQp) -> SparseQP {
    SparseQP::from_triplets(
        d.n(),
        &d.p_upper_triplets(),
        d.q.iter().copied().collect(),
        d.m(),
        &d.a_triplets(),
        d.l.clone(),
        d.u.clone(),
    )
    .unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn scalar_unconstrained() {
    let qp = SparseQP::from_triplets(1, &[(0, 0, 1.0)], vec![-1.0], 0, &[], vec![], vec![]).unwrap();
    let sol = solve(&qp, &SolverSettings::default(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Solved);
    // dual tolerance is eps_abs + eps_rel·max(|Px|, |q|) = 2e-5
    assert!((sol.x[0] - 1.0).abs() < 2e-5, "{sol:?}");
}

#[test]
fn two_variable_halfspace() {
    // min x² + y²  s.t.  x + y ≥ 2  → (1, 1) with multiplier y = −2
    let qp = SparseQP::from_triplets(
        2,
        &[(0, 0, 2.0), (1, 1, 2.0)],
        vec![0.0, 0.0],
        1,
        &[(0, 0, 1.0), (0, 1, 1.0)],
        vec![2.0],
        vec![f64::INFINITY],
    )
    .unwrap();
    let sol = solve(&qp, &SolverSettings::default(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::Solved);
    assert!(max_diff(&sol.x, &[1.0, 1.0]) < 1e-4, "{:?}", sol.x);
    assert!((sol.y[0] + 2.0).abs() < 1e-3, "{:?}", sol.y);
}

#[test]
fn box_qps_match_brute_force_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let settings = SolverSettings { polish: true, ..Default::default() };
    for _ in 0..40 {
        let d = DenseQp::random_box(&mut rng, 8);
        let expect = brute_force_box(&d);
        let sol = solve(&to_sparse(&d), &settings, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        let err = max_diff(&sol.x, expect.as_slice());
        assert!(err < 1e-5, "x error {err}");
    }
}

#[test]
fn general_qps_match_active_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let settings = SolverSettings { polish: true, ..Default::default() };
    for trial in 0..60 {
        let n = 2 + trial % 11;
        let m = n + trial % 19;
        let d = DenseQp::random(&mut rng, n, m.min(30));
        let expect = active_set_solve(&d);
        let qp = to_sparse(&d);
        let sol = solve(&qp, &settings, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        let err = max_diff(&sol.x, expect.as_slice());
        assert!(err < 1e-5, "trial {trial}: x error {err}");
        let (pr, du) = kkt_residuals(&qp, &sol.x, &sol.y);
        assert!(pr <= 1e-5 && du <= 1e-5, "residuals {pr} {du}");
    }
}

#[test]
fn solved_status_implies_small_residuals_without_polish() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let settings = SolverSettings::default();
    for _ in 0..30 {
        let d = DenseQp::random(&mut rng, 6, 12);
        let qp = to_sparse(&d);
        let sol = solve(&qp, &settings, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Solved);
        let (pr, du) = kkt_residuals(&qp, &sol.x, &sol.y);
        // tolerances are relative to the problem data, which is O(10) here
        assert!(pr <= 1e-3 && du <= 1e-3, "residuals {pr} {du}");
        assert!((pr - sol.primal_res).abs() < 1e-9 && (du - sol.dual_res).abs() < 1e-9);
    }
}

#[test]
fn warm_start_agrees_and_saves_iterations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let settings = SolverSettings::default();
    let mut saved = 0usize;
    for _ in 0..20 {
        let d = DenseQp::random(&mut rng, 10, 25);
        let qp = to_sparse(&d);
        let cold = solve(&qp, &settings, None).unwrap();
        let warm = solve(&qp, &settings, Some((&cold.x, &cold.y))).unwrap();
        assert!(max_diff(&cold.x, &warm.x) <= 10.0 * settings.eps_abs * 10.0);
        assert!(warm.iterations <= cold.iterations);

        let mut perturbed = qp.clone();
        perturbed.q.iter_mut().for_each(|v| *v += 1e-3);
        let c2 = solve(&perturbed, &settings, None).unwrap();
        let w2 = solve(&perturbed, &settings, Some((&cold.x, &cold.y))).unwrap();
        if w2.iterations < c2.iterations {
            saved += 1;
        }
    }
    assert!(saved >= 15, "warm start helped on only {saved}/20 perturbed problems");
}

#[test]
fn tighter_tolerance_never_loosens_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let qp = to_sparse(&DenseQp::random(&mut rng, 8, 16));
        let loose = SolverSettings { eps_abs: 1e-4, eps_rel: 1e-4, ..Default::default() };
        let tight = SolverSettings { eps_abs: 1e-5, eps_rel: 1e-5, ..Default::default() };
        let a = solve(&qp, &loose, None).unwrap();
        let b = solve(&qp, &tight, None).unwrap();
        let ra = kkt_residuals(&qp, &a.x, &a.y);
        let rb = kkt_residuals(&qp, &b.x, &b.y);
        let tol_a = 1e-4 * (1.0 + qp.q.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        assert!(rb.0 <= ra.0.max(tol_a) && rb.1 <= ra.1.max(tol_a));
    }
}

#[test]
fn cost_scaling_keeps_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let settings = SolverSettings { polish: true, ..Default::default() };
    for c in [1e-3, 0.5, 40.0] {
        let qp = to_sparse(&DenseQp::random(&mut rng, 7, 14));
        let mut scaled = qp.clone();
        scaled.p.values.iter_mut().for_each(|v| *v *= c);
        scaled.q.iter_mut().for_each(|v| *v *= c);
        let a = solve(&qp, &settings, None).unwrap();
        let b = solve(&scaled, &settings, None).unwrap();
        assert!(max_diff(&a.x, &b.x) < 1e-5);
    }
}

#[test]
fn detects_primal_infeasibility() {
    // x ≥ 1 and x ≤ −1
    let qp = SparseQP::from_triplets(
        1,
        &[(0, 0, 1.0)],
        vec![0.0],
        2,
        &[(0, 0, 1.0), (1, 0, 1.0)],
        vec![1.0, -INFTY],
        vec![INFTY, -1.0],
    )
    .unwrap();
    let sol = solve(&qp, &SolverSettings::default(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
}

#[test]
fn detects_dual_infeasibility() {
    // min −x  s.t.  x ≥ 0
    let qp = SparseQP::from_triplets(1, &[], vec![-1.0], 1, &[(0, 0, 1.0)], vec![0.0], vec![INFTY]).unwrap();
    let sol = solve(&qp, &SolverSettings::default(), None).unwrap();
    assert_eq!(sol.status, SolveStatus::DualInfeasible);
}

#[test]
fn max_iter_returns_best_iterate() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let qp = to_sparse(&DenseQp::random(&mut rng, 10, 25));
    let settings = SolverSettings { max_iter: 3, ..Default::default() };
    let sol = solve(&qp, &settings, None).unwrap();
    assert_eq!(sol.status, SolveStatus::MaxIter);
    assert_eq!(sol.iterations, 3);
    assert!(sol.primal_res.is_finite() && sol.dual_res.is_finite());
}

#[test]
fn rejects_nonconvex_and_bad_settings() {
    let qp = SparseQP::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)], vec![0.0; 2], 0, &[], vec![], vec![]).unwrap();
    assert!(matches!(solve(&qp, &SolverSettings::default(), None), Err(QpError::NotConvex)));
    let ok = SparseQP::from_triplets(1, &[(0, 0, 1.0)], vec![0.0], 0, &[], vec![], vec![]).unwrap();
    let bad = SolverSettings { alpha: 2.0, ..Default::default() };
    assert!(matches!(AdmmSolver::new(&ok, bad), Err(QpError::InvalidSettings(_))));
}

#[test]
fn status_strings_round_trip() {
    for s in [SolveStatus::Solved, SolveStatus::MaxIter, SolveStatus::PrimalInfeasible, SolveStatus::DualInfeasible] {
        assert_eq!(s.as_str().parse::<SolveStatus>().unwrap(), s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_qps_are_solved_to_kkt_tolerance(seed in any::<u64>(), n in 1usize..10, extra in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = DenseQp::random(&mut rng, n, n + extra);
        let qp = to_sparse(&d);
        let settings = SolverSettings { polish: true, ..Default::default() };
        let sol = solve(&qp, &settings, None).unwrap();
        prop_assert_eq!(sol.status, SolveStatus::Solved);
        let expect = active_set_solve(&d);
        prop_assert!(max_diff(&sol.x, expect.as_slice()) < 1e-5);
    }

    #[test]
    fn resolving_is_reproducible(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let qp = to_sparse(&DenseQp::random(&mut rng, 6, 10));
        let a = solve(&qp, &SolverSettings::default(), None).unwrap();
        let b = solve(&qp, &SolverSettings::default(), None).unwrap();
        prop_assert_eq!(a, b);
    }
}
