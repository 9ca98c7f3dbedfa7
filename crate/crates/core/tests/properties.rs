use std::sync::Arc;

use perfgame_core::catalog;
use perfgame_core::game::{BlockVector, FeasibleSet, GameDims, SetDescriptor};
use perfgame_core::linalg::Matrix;
use perfgame_core::solvers::{online_ls_update, StepDecaySchedule};
use perfgame_core::{compute_constants, solve_perf_stable};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mixed_set() -> (Arc<GameDims>, FeasibleSet<f64>) {
    let dims = GameDims::new(vec![2, 1, 3], vec![2, 1, 3]).unwrap();
    let set = FeasibleSet::new(
        &dims,
        vec![
            SetDescriptor::Ball { center: vec![0.5, -0.5], radius: 2.0 },
            SetDescriptor::Box { lower: vec![-1.0], upper: vec![3.0] },
            SetDescriptor::WholeSpace,
        ],
    )
    .unwrap();
    (Arc::new(dims), set)
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_nonexpansive(
        a in prop::collection::vec(-20.0..20.0f64, 6),
        b in prop::collection::vec(-20.0..20.0f64, 6),
        shrink in 0.0..0.9f64,
    ) {
        let (dims, set) = mixed_set();
        let x = BlockVector::from_vec(dims.clone(), a).unwrap();
        let y = BlockVector::from_vec(dims, b).unwrap();
        let px = set.project(&x, shrink).unwrap();
        let py = set.project(&y, shrink).unwrap();
        prop_assert!(set.contains(&px, shrink, 1e-12));
        prop_assert!(px.dist(&set.project(&px, shrink).unwrap()) <= 1e-12);
        prop_assert!(px.dist(&py) <= x.dist(&y) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn block_views_partition_the_vector(data in prop::collection::vec(-5.0..5.0f64, 6)) {
        let (dims, _) = mixed_set();
        let x = BlockVector::from_vec(dims, data.clone()).unwrap();
        let joined: Vec<f64> = (0..3).flat_map(|i| x.block(i).to_vec()).collect();
        prop_assert_eq!(joined, data);
        for i in 0..3 {
            prop_assert_eq!(x.others(i).len(), 6 - x.block(i).len());
        }
    }

    #[test]
    fn performative_map_decomposes(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = catalog::random_affine::<f64, _>(&mut rng, 0.6, false).unwrap();
        let x = game.vector((0..game.dims().total()).map(|k| (k as f64 * 0.37 + seed as f64 * 1e-3).sin()).collect()).unwrap();
        prop_assert_eq!(game.performative_grad_map(&x), game.static_grad_map(&x, &x).add(&game.h_map(&x, &x)));
    }

    #[test]
    fn constants_are_consistent(seed in 0u64..10_000, target in 0.05..0.95f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = catalog::random_affine::<f64, _>(&mut rng, target, seed % 2 == 0).unwrap();
        let c = compute_constants(&game).unwrap();
        prop_assert!(c.alpha > 0.0 && c.lipschitz >= c.alpha * (1.0 - 1e-12));
        prop_assert!(c.beta.iter().chain(&c.gamma).all(|v| *v >= 0.0));
        prop_assert!((c.rho - target).abs() <= 1e-9 * target.max(1.0));
        prop_assert!(c.retrain_factor() <= c.rho);
    }

    #[test]
    fn stable_point_is_a_retraining_fixed_point(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = catalog::random_affine::<f64, _>(&mut rng, 0.5, seed % 2 == 1).unwrap();
        let ps = solve_perf_stable(&game).unwrap().point;
        let next = perfgame_core::solvers::retrain_step(&game, &ps, 1e-12).unwrap();
        prop_assert!(next.dist(&ps) <= 1e-9 * ps.norm().max(1.0));
    }

    #[test]
    fn least_squares_update_fixes_the_truth(
        entries in prop::collection::vec(-3.0..3.0f64, 6),
        u in prop::collection::vec(-2.0..2.0f64, 3),
        nu in 0.0..0.5f64,
    ) {
        let truth = Matrix::new(2, 3, entries).unwrap();
        let b = truth.mul_vec(&u);
        let next = online_ls_update(&truth, &b, &u, nu);
        prop_assert!(next.sub(&truth).max_abs() <= 1e-12);
    }

    #[test]
    fn step_decay_halves_steps(
        alpha in 0.1..5.0f64,
        rho in 0.0..0.9f64,
        lip_ratio in 1.0..4.0f64,
        eps in 1e-4..1e-1f64,
        sigma in 0.0..3.0f64,
    ) {
        let s = StepDecaySchedule::rsgm(alpha, rho, alpha * lip_ratio, 1.0, eps, sigma).unwrap();
        prop_assert_eq!(s.epochs.len(), s.k + 1);
        for w in s.epochs.windows(2) {
            prop_assert!((w[1].0 - w[0].0 / 2.0).abs() <= 1e-15 * w[0].0);
        }
        // Later epochs double in length up to rounding.
        for w in s.epochs[1..].windows(2) {
            prop_assert!(w[1].1 + 1 >= 2 * w[0].1 && w[1].1 <= 2 * w[0].1);
        }
        let total: usize = s.epochs.iter().map(|e| e.1).sum();
        prop_assert_eq!(s.step_at(total - 1), s.epochs.last().unwrap().0);
    }
}
