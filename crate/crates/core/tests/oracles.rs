use perfgame_core::catalog;
use perfgame_core::oracles::{
    certify_monotone, projected_residual, solve_nash, solve_perf_stable, solve_perf_stable_with, solve_social_opt,
    EquilibriumKind, HMonotone, SolveMethod,
};
use perfgame_core::{compute_constants, Game, GameError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_point(actual: &[f64], expected: &[f64], tol: f64) {
    assert_eq!(actual.len(), expected.len());
    for (a, e) in actual.iter().zip(expected) {
        assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
    }
}

fn random_point(game: &Game, rng: &mut ChaCha8Rng, scale: f64) -> perfgame_core::Vector {
    game.vector((0..game.dims().total()).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

#[test]
fn monopoly_equilibria() {
    let game = catalog::scalar_revenue::<f64>(1, 1.0, -1.0, 0.0, 2.0, 1.0, 0.0, None).unwrap();
    let ne = solve_nash(&game).unwrap();
    assert_eq!(ne.kind, EquilibriumKind::Nash);
    assert_eq!(ne.solver, SolveMethod::LinearSolve);
    assert_point(ne.point.as_slice(), &[0.25], 1e-12);
    assert!(ne.residual <= 1e-10);
    let ps = solve_perf_stable(&game).unwrap();
    assert_point(ps.point.as_slice(), &[1.0 / 3.0], 1e-12);
}

#[test]
fn duopoly_equilibria() {
    let game = catalog::scalar_duopoly::<f64>();
    let ne = solve_nash(&game).unwrap();
    assert_point(ne.point.as_slice(), &[2.0 / 7.0; 2], 1e-12);
    let ps = solve_perf_stable(&game).unwrap();
    assert_point(ps.point.as_slice(), &[0.4; 2], 1e-12);
    let so = solve_social_opt(&game).unwrap();
    assert_point(so.point.as_slice(), &[1.0 / 3.0; 2], 1e-12);
    for r in [&ne, &ps, &so] {
        assert!(r.residual <= 1e-10);
    }
    assert!((game.social_cost(&so.point) + 1.0 / 3.0).abs() < 1e-12);
    assert!((game.social_cost(&ne.point) + 16.0 / 49.0).abs() < 1e-12);
    assert!((game.social_cost(&ps.point) + 0.32).abs() < 1e-12);
}

#[test]
fn static_game_collapses_concepts() {
    let game = catalog::scalar_revenue::<f64>(3, 0.7, 0.0, 0.0, 1.0, 1.0, 0.0, None).unwrap();
    let ne = solve_nash(&game).unwrap();
    assert_point(ne.point.as_slice(), &[0.7; 3], 1e-12);
    assert_point(solve_perf_stable(&game).unwrap().point.as_slice(), ne.point.as_slice(), 1e-12);
    assert_point(solve_social_opt(&game).unwrap().point.as_slice(), ne.point.as_slice(), 1e-12);
}

#[test]
fn concept_separation_on_duopoly() {
    let game = catalog::scalar_duopoly::<f64>();
    let ps = solve_perf_stable(&game).unwrap().point;
    assert!(game.static_grad_map(&ps, &ps).norm() <= 1e-9);
    assert!(game.performative_grad_map(&ps).norm() > 0.1);
    let ne = solve_nash(&game).unwrap().point;
    assert!(game.performative_grad_map(&ne).norm() <= 1e-9);
    let p = game.static_grad_map(&ne, &ne);
    let q = game.h_map(&ne, &ne);
    assert!(p.norm() > 0.1);
    assert!(p.add(&q).norm() <= 1e-9);
}

#[test]
fn constrained_nash_sits_on_the_boundary() {
    let game = catalog::scalar_duopoly_boxed::<f64>(0.2);
    let ne = solve_nash(&game).unwrap();
    assert_eq!(ne.solver, SolveMethod::FixedPointIteration);
    assert_point(ne.point.as_slice(), &[0.2; 2], 1e-10);
    assert!(ne.residual <= 1e-10);
    // A box wide enough to contain the interior solution changes nothing.
    let wide = catalog::scalar_duopoly_boxed::<f64>(5.0);
    assert_point(solve_nash(&wide).unwrap().point.as_slice(), &[2.0 / 7.0; 2], 1e-10);
    assert_point(solve_perf_stable(&wide).unwrap().point.as_slice(), &[0.4; 2], 1e-10);
}

#[test]
fn singular_systems_are_reported() {
    // λ = 2a makes the Nash system of the monopoly singular.
    let game = catalog::scalar_revenue::<f64>(1, 1.0, 1.0, 0.0, 2.0, 1.0, 0.0, None).unwrap();
    assert!(matches!(solve_nash(&game), Err(GameError::NoCertifiedSolution(_))));
}

#[test]
fn oracle_consistency_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..100 {
        let constrained = k % 2 == 1;
        let game = catalog::random_affine::<f64, _>(&mut rng, 0.4, constrained).unwrap();
        let ne = solve_nash(&game).unwrap();
        let d = game.performative_grad_map(&ne.point);
        assert!(projected_residual(&game, &ne.point, &d) <= 1e-9);
        let ps = solve_perf_stable(&game).unwrap();
        let g = game.static_grad_map(&ps.point, &ps.point);
        assert!(projected_residual(&game, &ps.point, &g) <= 1e-9);
        assert!(game.feasible().contains(&ne.point, 0.0, 1e-12) && game.feasible().contains(&ps.point, 0.0, 1e-12));
    }
}

#[test]
fn linear_solve_and_fixed_point_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..100 {
        let game = catalog::random_affine::<f64, _>(&mut rng, 0.7, false).unwrap();
        let a = solve_perf_stable_with(&game, SolveMethod::LinearSolve).unwrap();
        let b = solve_perf_stable_with(&game, SolveMethod::FixedPointIteration).unwrap();
        assert_eq!(b.solver, SolveMethod::FixedPointIteration);
        assert!(a.point.dist(&b.point) <= 1e-8, "{:?} vs {:?}", a.point, b.point);
    }
}

#[test]
fn certificate_examples() {
    let strategic = catalog::strategic_pair::<f64>(2, 0.5, 0.1).unwrap();
    let c = compute_constants(&strategic).unwrap();
    let cert = certify_monotone(&strategic, &c);
    assert!((cert.spectral_gap.unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(cert.h_monotone, HMonotone::SufficientSpectralCondition);

    let revenue = catalog::scalar_revenue::<f64>(2, 1.0, -0.25, 0.25, 2.0, 1.0, 0.0, None).unwrap();
    let c = compute_constants(&revenue).unwrap();
    assert!((c.rho - 0.25).abs() < 1e-12);
    let cert = certify_monotone(&revenue, &c);
    assert!(cert.passed && cert.rho_ok);
    assert_eq!(cert.h_monotone, HMonotone::ConstantMap);
    assert!((cert.modulus.unwrap() - 1.0).abs() < 1e-12);
    assert!(cert.spectral_gap.is_none());
    // The true modulus of D is larger than the certified one.
    let jd = revenue.performative_jacobian();
    assert!(perfgame_core::linalg::lambda_min(&jd.sym_part()) >= 1.0);

    let duo = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&duo).unwrap();
    let cert = certify_monotone(&duo, &c);
    assert!(!cert.rho_ok && !cert.passed);
    assert!(cert.modulus.is_none());
    assert_eq!(cert.h_monotone, HMonotone::ConstantMap);
}

#[test]
fn certificate_is_sound() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for k in 0..1000 {
        let players = 2 + k % 2;
        let game = catalog::random_certified_strategic::<f64, _>(&mut rng, players, 2, 3, 0.3).unwrap();
        let c = compute_constants(&game).unwrap();
        let cert = certify_monotone(&game, &c);
        assert!(cert.passed);
        let modulus = cert.modulus.unwrap();
        assert!(modulus > 0.0);
        for _ in 0..10 {
            let x = random_point(&game, &mut rng, 5.0);
            let y = random_point(&game, &mut rng, 5.0);
            let gap = game.performative_grad_map(&x).sub(&game.performative_grad_map(&y)).dot(&x.sub(&y));
            assert!(gap >= modulus * x.dist_sq(&y) - 1e-9, "gap {gap} modulus {modulus}");
        }
    }
}

#[test]
fn single_precision_oracles() {
    let game = catalog::scalar_duopoly::<f32>();
    let ps = solve_perf_stable(&game).unwrap();
    for v in ps.point.as_slice() {
        assert!((v - 0.4).abs() < 1e-5);
    }
    let so = solve_social_opt(&game).unwrap();
    for v in so.point.as_slice() {
        assert!((v - 1.0 / 3.0).abs() < 1e-5);
    }
}
