//! Single-iteration update rules.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{GameError, Result};
use crate::game::constants::GameConstants;
use crate::game::dims::BlockVector;
use crate::game::instance::GameInstance;
use crate::linalg;
use crate::oracles::StaticNashSolver;
use crate::scalar::Scalar;

fn project<T: Scalar>(game: &GameInstance<T>, mut y: BlockVector<T>, shrink: T) -> BlockVector<T> {
    game.feasible().project_in_place(&mut y, shrink);
    y
}

/// Repeated retraining: each step plays the Nash equilibrium of the static
/// game with distributions frozen at the current iterate.
#[derive(Debug, Clone)]
pub struct Retrainer<T> {
    solver: StaticNashSolver<T>,
}

impl<T: Scalar> Retrainer<T> {
    /// Rejects `ρ ≥ 1` in strict mode and warns otherwise.
    pub fn new(game: &GameInstance<T>, constants: &GameConstants<T>, strict: bool) -> Result<Self> {
        let factor = constants.retrain_factor();
        if !(factor < T::one()) {
            if strict {
                return Err(GameError::AssumptionViolation {
                    assumption: "rho < 1",
                    detail: format!("retraining contraction factor is {factor}"),
                });
            }
            warn!("retraining contraction factor {factor} >= 1; convergence is not guaranteed");
        }
        Ok(Self { solver: StaticNashSolver::new(game)? })
    }

    pub fn step(&self, game: &GameInstance<T>, x: &BlockVector<T>, inner_tol: T) -> Result<BlockVector<T>> {
        Ok(self.solver.solve(game, x, x, inner_tol)?.0)
    }
}

/// One exact retraining step `x⁺ = Nash(G(x))`.
pub fn retrain_step<T: Scalar>(game: &GameInstance<T>, x: &BlockVector<T>, inner_tol: T) -> Result<BlockVector<T>> {
    StaticNashSolver::new(game)?.solve(game, x, x, inner_tol).map(|r| r.0)
}

/// `proj_X(x - η G_x(x))`
pub fn repeated_gradient_step<T: Scalar>(game: &GameInstance<T>, x: &BlockVector<T>, eta: T) -> BlockVector<T> {
    project(game, x.offset(-eta, &game.static_grad_map(x, x)), T::zero())
}

/// Sampled direction `(∇_i ℓ_i(x, z_i))_i` with `z_i ~ D_i(x)`; its mean is
/// `G_x(x)`.
pub fn rsgm_direction<T: Scalar, R: Rng + ?Sized>(game: &GameInstance<T>, x: &BlockVector<T>, rng: &mut R) -> BlockVector<T> {
    let samples = game.sample_all(x, rng);
    game.sample_grad(x, &samples)
}

pub fn rsgm_step<T: Scalar, R: Rng + ?Sized>(game: &GameInstance<T>, x: &BlockVector<T>, eta: T, rng: &mut R) -> BlockVector<T> {
    project(game, x.offset(-eta, &rsgm_direction(game, x, rng)), T::zero())
}

/// Sampled direction `w_i = ∇_i ℓ_i + A_iᵀ ∇_{z_i} ℓ_i`; its mean is `D(x)`.
pub fn sgm_nash_direction<T: Scalar, R: Rng + ?Sized>(game: &GameInstance<T>, x: &BlockVector<T>, rng: &mut R) -> BlockVector<T> {
    let samples = game.sample_all(x, rng);
    game.sample_total_grad(x, &samples)
}

pub fn sgm_nash_step<T: Scalar, R: Rng + ?Sized>(game: &GameInstance<T>, x: &BlockVector<T>, eta: T, rng: &mut R) -> BlockVector<T> {
    project(game, x.offset(-eta, &sgm_nash_direction(game, x, rng)), T::zero())
}

/// Uniform draw from the unit sphere in `R^dim` (normalized Gaussian).
pub fn sphere_sample<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    if dim == 1 {
        return vec![if rng.random::<bool>() { T::one() } else { -T::one() }];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-300 {
            return v.iter().map(|&a| T::lit(a / n)).collect();
        }
    }
}

/// Radius of the derivative-free perturbation. The method keeps iterates in
/// `(1 - δ)X` so that queried points `x + δv` stay in `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeFreeConfig<T> {
    radius: T,
    shrink: T,
}

impl<T: Scalar> DerivativeFreeConfig<T> {
    /// Requires `δ > 0`, and on constrained games `δ < 1` with every set
    /// containing the unit ball around the origin.
    pub fn new(game: &GameInstance<T>, radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(GameError::Config("derivative-free radius must be positive".into()));
        }
        if game.feasible().is_whole_space() {
            return Ok(Self { radius, shrink: T::zero() });
        }
        if radius >= T::one() {
            return Err(GameError::Config("derivative-free radius must be below 1 on constrained sets".into()));
        }
        if !game.feasible().admits_unit_perturbation() {
            return Err(GameError::Config(
                "every constrained strategy set must contain the unit ball for derivative-free queries".into(),
            ));
        }
        Ok(Self { radius, shrink: radius })
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    /// Shrink factor applied to the feasible set (`δ`, or 0 on whole space).
    pub fn shrink(&self) -> T {
        self.shrink
    }
}

/// Derivative-free update given the perturbation `v` and the observed losses
/// `ℓ_i(x + δv, z_i)`: `x_i - η (d_i/δ) ℓ_i v_i`, projected onto `(1 - δ)X`.
pub fn dfo_update<T: Scalar>(
    game: &GameInstance<T>,
    x: &BlockVector<T>,
    cfg: &DerivativeFreeConfig<T>,
    eta: T,
    v: &BlockVector<T>,
    losses: &[T],
) -> BlockVector<T> {
    let mut y = x.clone();
    for (i, &loss) in losses.iter().enumerate() {
        let scale = eta * T::lit(game.dims().decision_dim(i) as f64) / cfg.radius * loss;
        linalg::axpy(-scale, v.block(i), y.block_mut(i));
    }
    project(game, y, cfg.shrink)
}

pub fn dfo_step<T: Scalar, R: Rng + ?Sized>(
    game: &GameInstance<T>,
    x: &BlockVector<T>,
    cfg: &DerivativeFreeConfig<T>,
    eta: T,
    rng: &mut R,
) -> BlockVector<T> {
    let mut v = game.zeros();
    for i in 0..game.players() {
        let s = sphere_sample(game.dims().decision_dim(i), rng);
        v.block_mut(i).copy_from_slice(&s);
    }
    let query = x.offset(cfg.radius, &v);
    let losses: Vec<T> = (0..game.players())
        .map(|i| {
            let s = game.sample_player(&query, i, rng);
            game.loss_value(i, &query, &s)
        })
        .collect();
    dfo_update(game, x, cfg, eta, &v, &losses)
}
