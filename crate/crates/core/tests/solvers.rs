#![allow(clippy::needless_range_loop)]

use perfgame_core::catalog;
use perfgame_core::game::Sample;
use perfgame_core::linalg::Matrix;
use perfgame_core::solvers::{
    agm_step, dfo_update, repeated_gradient_step, retrain_step, rsgm_direction, rsgm_step, run_step_decay,
    sgm_nash_direction, sgm_nash_step, sphere_sample, AdaptiveState, DerivativeFreeConfig, DfoConfig, NoiseKind, NoiseModel,
    ScheduleConfig, StepDecaySchedule,
};
use perfgame_core::{
    compute_constants, run_solver, solve_nash, solve_perf_stable, Algorithm, Game, GameError, SolverConfig, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn point(game: &Game, v: &[f64]) -> Vector {
    game.vector(v.to_vec()).unwrap()
}

fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
    for (a, e) in actual.iter().zip(expected) {
        assert!((a - e).abs() <= tol, "{actual:?} vs {expected:?}");
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Duopoly without base noise.
fn quiet_duopoly() -> Game {
    catalog::scalar_revenue(2, 1.0, -1.0, 0.5, 2.0, 1.0, 0.0, None).unwrap()
}

#[test]
fn retraining_examples() {
    let game = catalog::scalar_duopoly::<f64>();
    let x1 = retrain_step(&game, &game.zeros(), 1e-12).unwrap();
    assert_close(x1.as_slice(), &[0.5, 0.5], 1e-12);
    let x2 = retrain_step(&game, &x1, 1e-12).unwrap();
    assert_close(x2.as_slice(), &[0.375, 0.375], 1e-12);
    let ratio = (x2.as_slice()[0] - 0.4).abs() / (x1.as_slice()[0] - 0.4).abs();
    assert!((ratio - 0.25).abs() < 1e-9);
    let ps = point(&game, &[0.4, 0.4]);
    assert_close(retrain_step(&game, &ps, 1e-12).unwrap().as_slice(), &[0.4, 0.4], 1e-12);
}

#[test]
fn repeated_gradient_examples() {
    let game = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&game).unwrap();
    let eta = c.alpha / (c.lipschitz * c.lipschitz);
    assert!((eta - 0.5).abs() < 1e-12);
    let x1 = repeated_gradient_step(&game, &game.zeros(), 0.5);
    assert_close(x1.as_slice(), &[0.5, 0.5], 1e-15);
    let x2 = repeated_gradient_step(&game, &x1, 0.5);
    assert_close(x2.as_slice(), &[0.375, 0.375], 1e-15);
    let ps = point(&game, &[0.4, 0.4]);
    for eta in [0.01, 0.3, 2.0] {
        assert_close(repeated_gradient_step(&game, &ps, eta).as_slice(), &[0.4, 0.4], 1e-15);
    }
}

#[test]
fn rsgm_without_noise_is_repeated_gradient_play() {
    let game = quiet_duopoly();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let x = point(&game, &[rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]);
        let eta = rng.random_range(0.001..1.0);
        assert_eq!(rsgm_step(&game, &x, eta, &mut rng), repeated_gradient_step(&game, &x, eta));
    }
}

#[test]
fn rsgm_direction_is_unbiased() {
    let game = catalog::scalar_duopoly::<f64>();
    let x = point(&game, &[0.5, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws: Vec<Vector> = (0..100_000).map(|_| rsgm_direction(&game, &x, &mut rng)).collect();
    for k in 0..2 {
        let (mean, se) = mean_and_se(&draws.iter().map(|d| d.as_slice()[k]).collect::<Vec<_>>());
        assert!((mean - 0.25).abs() <= 3.0 * se, "{mean} se {se}");
    }
}

#[test]
fn sgm_direction_examples() {
    let game = catalog::scalar_duopoly::<f64>();
    let x = point(&game, &[1.0, 1.0]);
    let w = game.sample_total_grad(&x, &[Sample::data(vec![0.0]), Sample::data(vec![0.0])]);
    assert_close(w.as_slice(), &[3.0, 3.0], 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws: Vec<f64> = (0..100_000).map(|_| sgm_nash_direction(&game, &x, &mut rng).as_slice()[0]).collect();
    let (mean, se) = mean_and_se(&draws);
    assert!((mean - 2.5).abs() <= 3.0 * se, "{mean} se {se}");
    assert!((game.performative_grad_map(&x).as_slice()[0] - 2.5).abs() < 1e-15);
}

#[test]
fn sgm_direction_is_unbiased_on_random_games() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let game = catalog::random_affine::<f64, _>(&mut rng, 0.5, false).unwrap();
        let x = game.vector((0..game.dims().total()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let target = game.performative_grad_map(&x);
        let draws: Vec<Vector> = (0..100_000).map(|_| sgm_nash_direction(&game, &x, &mut rng)).collect();
        for k in 0..target.len() {
            let (mean, se) = mean_and_se(&draws.iter().map(|d| d.as_slice()[k]).collect::<Vec<_>>());
            assert!((mean - target.as_slice()[k]).abs() <= 3.0 * se + 1e-12, "{mean} vs {} se {se}", target.as_slice()[k]);
        }
    }
}

#[test]
fn sgm_matches_rsgm_without_performative_effects() {
    let game = catalog::scalar_revenue::<f64>(2, 1.0, 0.0, 0.0, 1.0, 1.0, 0.3, None).unwrap();
    let x = point(&game, &[0.2, -0.4]);
    for seed in 0..20 {
        let a = sgm_nash_step(&game, &x, 0.1, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = rsgm_step(&game, &x, 0.1, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(a, b);
    }
}

#[test]
fn derivative_free_examples() {
    let boxed = catalog::scalar_revenue::<f64>(1, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, Some(1.0)).unwrap();
    let cfg = DerivativeFreeConfig::new(&boxed, 0.5).unwrap();
    let x = point(&boxed, &[0.9]);
    let v = point(&boxed, &[1.0]);
    assert_eq!(dfo_update(&boxed, &x, &cfg, 0.1, &v, &[0.0]).as_slice(), &[0.5]);

    let free = catalog::scalar_revenue::<f64>(1, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, None).unwrap();
    let cfg = DerivativeFreeConfig::new(&free, 0.5).unwrap();
    let (eta, c) = (0.1, 0.3);
    let x1 = dfo_update(&free, &free.zeros(), &cfg, eta, &v, &[c]);
    assert!((x1.as_slice()[0] + 2.0 * eta * c).abs() < 1e-15);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let s: Vec<f64> = sphere_sample(1, &mut rng);
        assert!(s == vec![1.0] || s == vec![-1.0]);
        let s: Vec<f64> = sphere_sample(3, &mut rng);
        assert!((s.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert!(DerivativeFreeConfig::new(&boxed, 1.5).is_err());
    assert!(DerivativeFreeConfig::new(&boxed, 0.0).is_err());
}

#[test]
fn agm_schedule_constants() {
    let game = catalog::quadratic_single::<f64>();
    let mut c = compute_constants(&game).unwrap();
    c.alpha_perf = 1.0;
    c.lipschitz_perf = 2.0;
    let noise = NoiseModel::new(NoiseKind::GaussianIsotropic, game.dims());
    let mut state = AdaptiveState::from_zero(&game, &c, &noise, game.zeros()).unwrap();
    assert_eq!(state.k0, 33.0);
    assert_eq!(state.eta(), 0.0625);
    let (mut eta, mut nu) = (state.eta(), state.nu());
    let shape = state.a_hat[0].shape();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        agm_step(&game, &mut state, &noise, &mut rng);
        assert!(state.eta() < eta && state.nu() < nu);
        assert_eq!(state.a_hat[0].shape(), shape);
        (eta, nu) = (state.eta(), state.nu());
    }
    assert_eq!(state.t, 51);
}

#[test]
fn agm_with_exact_estimates_is_sgm() {
    let game = catalog::random_certified_strategic::<f64, _>(&mut ChaCha8Rng::seed_from_u64(11), 2, 2, 2, 0.3).unwrap();
    let c = compute_constants(&game).unwrap();
    let noise = NoiseModel::new(NoiseKind::RademacherProduct, game.dims());
    let truth: Vec<Matrix<f64>> = (0..2).map(|i| game.family().player(i).stacked().clone()).collect();
    let x = point(&game, &[0.3, -0.1, 0.2, 0.5]);
    for seed in 0..10 {
        let mut state = AdaptiveState::new(&game, &c, &noise, x.clone(), truth.clone()).unwrap();
        let eta = state.eta();
        agm_step(&game, &mut state, &noise, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let _probe = noise.sample(&game.shared_dims(), &mut rng);
        let expected = sgm_nash_step(&game, &x, eta, &mut rng);
        assert_eq!(state.x, expected);
    }
}

#[test]
fn probe_differences_recover_effect_matrix() {
    let game = catalog::strategic_pair::<f64>(2, 0.5, 0.5).unwrap();
    let x = point(&game, &[0.3, -0.1, 0.2, 0.5]);
    let u = point(&game, &[1.0, -0.5, 0.25, 2.0]);
    let probe = x.add(&u);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    for i in 0..2 {
        let target = game.family().player(i).stacked().mul_vec(u.as_slice());
        let diffs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let z = game.sample_distribution(&x, i, &mut rng);
                let q = game.sample_distribution(&probe, i, &mut rng);
                q.iter().zip(&z).map(|(a, b)| a - b).collect()
            })
            .collect();
        for k in 0..target.len() {
            let (mean, se) = mean_and_se(&diffs.iter().map(|d| d[k]).collect::<Vec<_>>());
            assert!((mean - target[k]).abs() <= 3.0 * se, "{mean} vs {} se {se}", target[k]);
        }
    }
}

#[test]
fn estimation_error_stays_under_envelope() {
    let game = catalog::random_certified_strategic::<f64, _>(&mut ChaCha8Rng::seed_from_u64(12), 2, 1, 2, 0.3).unwrap();
    let c = compute_constants(&game).unwrap();
    let noise = NoiseModel::new(NoiseKind::GaussianIsotropic, game.dims());
    let steps = 10_000;
    let seeds = 20;
    let mut mean_err = vec![0.0; steps + 1];
    let mut envelope = (0.0, 0.0);
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = AdaptiveState::from_zero(&game, &c, &noise, game.zeros()).unwrap();
        envelope = (state.z, state.q0);
        for t in 1..=steps {
            agm_step(&game, &mut state, &noise, &mut rng);
            mean_err[t] += state.estimation_error(&game) / seeds as f64;
        }
    }
    let (z, q0) = envelope;
    // After `t` updates the estimate is `Â^{t+1}`.
    for t in 10..=steps {
        let bound = z / ((t + 1) as f64 + q0) * 1.25;
        assert!(mean_err[t] <= bound, "t = {t}: {} > {bound}", mean_err[t]);
    }
}

#[test]
fn retraining_contracts_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..100 {
        let target = rng.random_range(0.2..0.95);
        let game = catalog::random_affine::<f64, _>(&mut rng, target, k % 2 == 1).unwrap();
        let c = compute_constants(&game).unwrap();
        let factor = c.retrain_factor();
        assert!(factor <= c.rho);
        let ps = solve_perf_stable(&game).unwrap().point;
        let mut x = game.vector((0..game.dims().total()).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        game.feasible().project_in_place(&mut x, 0.0);
        for _ in 0..10 {
            let next = retrain_step(&game, &x, 1e-10).unwrap();
            assert!(next.dist(&ps) <= factor * x.dist(&ps) + 1e-6);
            x = next;
        }
    }
}

#[test]
fn benign_bias_one_step_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    while checked < 50 {
        let own = rng.random_range(-1.0..0.5);
        let cross = rng.random_range(-0.5..0.5);
        let lambda = rng.random_range(1.0..3.0);
        let bound = if checked % 2 == 0 { None } else { Some(rng.random_range(0.1..1.0)) };
        let game = catalog::scalar_revenue::<f64>(3, 1.0, own, cross, lambda, 1.0, 0.0, bound).unwrap();
        let c = compute_constants(&game).unwrap();
        if c.rho >= 1.0 {
            continue;
        }
        checked += 1;
        let (a, rho, l) = (c.alpha, c.rho, c.lipschitz);
        let eta = 0.99 * a * (1.0 - rho) / (8.0 * l * l);
        let coeff = (1.0 + 2.0 * eta * a * rho + 2.0 * (eta * a * rho).powi(2)) / (1.0 + eta * a * (1.0 + rho));
        let ps = solve_perf_stable(&game).unwrap().point;
        for _ in 0..100 {
            let mut x = game.vector((0..3).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
            game.feasible().project_in_place(&mut x, 0.0);
            let e0 = x.dist_sq(&ps);
            if e0 < 1e-12 {
                continue;
            }
            let next = rsgm_step(&game, &x, eta, &mut rng);
            assert!(next.dist_sq(&ps) / e0 <= coeff + 1e-6);
        }
    }
}

#[test]
fn step_decay_reaches_target_without_noise() {
    let game = quiet_duopoly();
    let c = compute_constants(&game).unwrap();
    let ps = solve_perf_stable(&game).unwrap().point;
    let eps = 1e-6;
    let schedule = StepDecaySchedule::rsgm(c.alpha, c.rho, c.lipschitz, 1.0, eps, 0.0).unwrap();
    assert_eq!(schedule.k, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let traj = run_step_decay(&game, game.zeros(), &schedule, &mut rng, rsgm_step, Some(&ps), "rsgm", 10);
    assert_eq!(traj.iterations, schedule.total_iterations());
    assert!(traj.final_error_sq() <= eps);

    let ne = solve_nash(&game).unwrap().point;
    let schedule = StepDecaySchedule::sgm_nash(c.alpha_perf, c.lipschitz_perf, 1.0, eps, 0.0).unwrap();
    let traj = run_step_decay(&game, game.zeros(), &schedule, &mut rng, sgm_nash_step, Some(&ne), "sgm", 10);
    assert!(traj.final_error_sq() <= eps);
}

#[test]
fn solvers_reach_their_equilibria() {
    let game = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&game).unwrap();
    let ps = solve_perf_stable(&game).unwrap().point;
    let ne = solve_nash(&game).unwrap().point;
    let run = |algorithm, iterations, reference: &Vector| {
        let mut cfg = SolverConfig::new(algorithm);
        cfg.iterations = iterations;
        cfg.seed = 3;
        cfg.dfo = Some(DfoConfig { radius: 1.0, eta0: 0.2 });
        run_solver(&game, &c, &cfg, Some(reference)).unwrap()
    };
    let r = run(Algorithm::Retrain, 200, &ps);
    assert!(r.final_error_sq() < 1e-20, "{:?}", r.records.iter().take(5).collect::<Vec<_>>());
    assert!(run(Algorithm::Rgm, 200, &ps).final_error_sq() < 1e-20);
    assert!(run(Algorithm::Rsgm, 20_000, &ps).final_error_sq() < 1e-3);
    assert!(run(Algorithm::Sgm, 20_000, &ne).final_error_sq() < 1e-3);
    assert!(run(Algorithm::Agm, 20_000, &ne).final_error_sq() < 1e-2);
    assert!(run(Algorithm::Dfo, 20_000, &ne).final_error_sq() < 0.1);
}

#[test]
fn iterates_stay_feasible() {
    let game = catalog::scalar_duopoly_boxed::<f64>(1.2);
    let c = compute_constants(&game).unwrap();
    for algorithm in Algorithm::ALL {
        let mut cfg = SolverConfig::new(algorithm);
        cfg.iterations = 500;
        cfg.init_scale = 10.0;
        cfg.step_size = matches!(algorithm, Algorithm::Rsgm | Algorithm::Sgm).then_some(0.5);
        let shrink = if algorithm == Algorithm::Dfo {
            cfg.dfo = Some(DfoConfig { radius: 0.5, eta0: 0.5 });
            0.5
        } else {
            0.0
        };
        let traj = run_solver(&game, &c, &cfg, None).unwrap();
        assert!(!traj.diverged);
        for r in &traj.records {
            let x = game.vector(r.point.clone()).unwrap();
            assert!(game.feasible().contains(&x, shrink, 0.0), "{algorithm}: {:?}", r.point);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let game = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&game).unwrap();
    let ne = solve_nash(&game).unwrap().point;
    for algorithm in Algorithm::ALL {
        let mut cfg = SolverConfig::new(algorithm);
        cfg.iterations = 300;
        cfg.seed = 17;
        cfg.dfo = Some(DfoConfig { radius: 1.0, eta0: 0.2 });
        let a = run_solver(&game, &c, &cfg, Some(&ne)).unwrap();
        let b = run_solver(&game, &c, &cfg, Some(&ne)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.records.len(), 301, "{algorithm}: {:?}", a.records.last());
        cfg.seed = 18;
        let c2 = run_solver(&game, &c, &cfg, Some(&ne)).unwrap();
        if algorithm != Algorithm::Retrain && algorithm != Algorithm::Rgm {
            assert_ne!(a.final_point, c2.final_point);
        }
    }
}

#[test]
fn strict_mode_enforces_step_bounds() {
    let game = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&game).unwrap();
    let mut cfg = SolverConfig::new(Algorithm::Sgm);
    cfg.strict_mode = true;
    cfg.step_size = Some(1.0);
    assert!(matches!(run_solver(&game, &c, &cfg, None), Err(GameError::StepSize { .. })));
    cfg.step_size = Some(1e-3);
    assert!(run_solver(&game, &c, &cfg, None).is_ok());

    let mut cfg = SolverConfig::new(Algorithm::Rsgm);
    cfg.strict_mode = true;
    cfg.step_size = Some(0.01);
    // ρ ≈ 0.79 leaves α(1-ρ)/(8L²) ≈ 0.013.
    assert!(run_solver(&game, &c, &cfg, None).is_ok());
    cfg.step_size = Some(0.02);
    assert!(matches!(run_solver(&game, &c, &cfg, None), Err(GameError::StepSize { .. })));

    let mut cfg = SolverConfig::new(Algorithm::Agm);
    cfg.step_size = Some(0.1);
    assert!(matches!(run_solver(&game, &c, &cfg, None), Err(GameError::Config(_))));

    // ρ > 1: strict retraining refuses, lenient retraining proceeds.
    let wild = catalog::scalar_revenue::<f64>(2, 1.0, 1.5, 1.5, 2.0, 1.0, 0.0, None).unwrap();
    let cw = compute_constants(&wild).unwrap();
    assert!(cw.retrain_factor() >= 1.0);
    let mut cfg = SolverConfig::new(Algorithm::Retrain);
    cfg.iterations = 5;
    assert!(run_solver(&wild, &cw, &cfg, None).is_ok());
    cfg.strict_mode = true;
    assert!(matches!(run_solver(&wild, &cw, &cfg, None), Err(GameError::AssumptionViolation { .. })));
}

#[test]
fn divergent_runs_are_truncated() {
    let game = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&game).unwrap();
    let mut cfg = SolverConfig::new(Algorithm::Rgm);
    cfg.step_size = Some(5.0);
    cfg.iterations = 1000;
    let traj = run_solver(&game, &c, &cfg, None).unwrap();
    assert!(traj.diverged);
    assert!(traj.iterations < 1000);
}

#[test]
fn solver_config_json() {
    let cfg = SolverConfig::from_json(
        r#"{"algorithm": "rsgm", "schedule": {"type": "step_decay", "target_eps": 0.01, "radius_sq": 1.0}, "seed": 4}"#,
    )
    .unwrap();
    assert_eq!(cfg.algorithm, Algorithm::Rsgm);
    assert!(matches!(cfg.schedule, Some(ScheduleConfig::StepDecay { .. })));
    assert_eq!(cfg.iterations, 1000);
    assert!(SolverConfig::from_json(r#"{"algorithm": "rsgm", "stepsize": 0.1}"#).is_err());
    assert!(SolverConfig::from_json(r#"{"algorithm": "newton"}"#).is_err());
    let back = SolverConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);

    // Step-decay replaces the iteration budget by the schedule length.
    let game = catalog::scalar_duopoly::<f64>();
    let c = compute_constants(&game).unwrap();
    let traj = run_solver(&game, &c, &cfg, None).unwrap();
    let expected = StepDecaySchedule::rsgm(c.alpha, c.rho, c.lipschitz, 1.0, 0.01, c.sigma.unwrap()).unwrap();
    assert_eq!(traj.iterations, expected.total_iterations());
}
