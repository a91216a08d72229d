mod common;

use common::{battery, infeasible_battery, random_psd, unbounded, C};
use relay_robust::conic::{
    hermitian_embed, rank_of, rank_of_eigenvalues, solve, ConicSolver, InteriorPoint, SolverConfig,
    Status,
};
use relay_robust::linalg::{sym_eigenvalues_desc, CMat};
use relay_robust::rng::GaussianSource;
use relay_robust::HermitianMatrix;

#[test]
fn battery_matches_hand_optima() {
    let cases = battery();
    assert!(cases.len() >= 10);
    for case in cases {
        let sol = InteriorPoint::default().solve(&case.prog).unwrap();
        assert_eq!(sol.status, Status::Optimal, "{}", case.name);
        let rel = (sol.objective - case.optimum).abs() / case.optimum.abs().max(1.0);
        assert!(
            rel <= 1e-6,
            "{}: {} vs {}",
            case.name,
            sol.objective,
            case.optimum
        );
    }
}

#[test]
fn optimal_solutions_resubstitute_and_respect_weak_duality() {
    let cfg = SolverConfig::default();
    for case in battery() {
        let sol = solve(&case.prog, &cfg).unwrap();
        for (r, b) in sol.residuals.iter().zip(&case.prog.blocks) {
            assert!(*r <= 10.0 * cfg.tol, "{} block {}: {r}", case.name, b.name);
        }
        let scale = sol.objective.abs().max(1.0);
        assert!(
            sol.objective >= sol.dual_objective - cfg.tol * scale,
            "{}",
            case.name
        );
        assert!(sol.duals.is_some());
    }
}

#[test]
fn infeasible_and_unbounded_are_classified() {
    for (name, prog) in infeasible_battery() {
        let sol = InteriorPoint::default().solve(&prog).unwrap();
        assert_eq!(sol.status, Status::Infeasible, "{name}");
    }
    assert_eq!(
        InteriorPoint::default().solve(&unbounded()).unwrap().status,
        Status::Unbounded
    );
}

#[test]
fn solves_are_deterministic() {
    for case in battery() {
        let a = InteriorPoint::default().solve(&case.prog).unwrap();
        let b = InteriorPoint::default().solve(&case.prog).unwrap();
        assert_eq!(a.x, b.x, "{}", case.name);
        assert_eq!(a.iterations, b.iterations);
    }
}

#[test]
fn rank_examples() {
    assert_eq!(rank_of_eigenvalues(&[1.0, 1e-5, 1e-9, 1e-9], 1e4), 1);
    assert_eq!(rank_of_eigenvalues(&[1.0, 1.0, 1.0, 1.0], 1e4), 4);
    assert_eq!(rank_of_eigenvalues(&[1.0, 2e-4, 1e-9, 0.0], 1e4), 2);
    let w = HermitianMatrix::from_real_diagonal(&[1e-9, 1.0, 2e-4, 0.0]);
    assert_eq!(rank_of(&w, 1e4), 2);
}

#[test]
fn embedding_examples() {
    let id = hermitian_embed(&HermitianMatrix::identity(2));
    assert_eq!(id, nalgebra::DMatrix::identity(4, 4));

    let w = HermitianMatrix::new(CMat::from_row_slice(
        2,
        2,
        &[
            C::new(1.0, 0.0),
            C::new(0.0, 1.0),
            C::new(0.0, -1.0),
            C::new(1.0, 0.0),
        ],
    ))
    .unwrap();
    let eig = sym_eigenvalues_desc(&hermitian_embed(&w));
    for (got, want) in eig.iter().zip([2.0, 2.0, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-12, "{eig:?}");
    }

    let mut src = GaussianSource::new(8, 0);
    for _ in 0..50 {
        let w = random_psd(4, &mut src);
        let e = sym_eigenvalues_desc(&hermitian_embed(&w));
        assert!(*e.last().unwrap() >= -1e-10);
        let we = w.eigenvalues_desc();
        for k in 0..4 {
            let scale = we[0].abs().max(1.0);
            assert!((e[2 * k] - we[k]).abs() <= 1e-10 * scale);
            assert!((e[2 * k + 1] - we[k]).abs() <= 1e-10 * scale);
        }
    }
}
