//! Adaptive gradient method: stochastic gradient play where each player
//! learns its performative-effect matrix by online least squares from
//! injected exploration noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::constants::GameConstants;
use crate::game::dims::{BlockVector, GameDims};
use crate::game::instance::GameInstance;
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `u ~ N(0, I)`
    GaussianIsotropic,
    /// Independent `±1` coordinates.
    RademacherProduct,
}

/// Exploration noise with `E[u_i u_iᵀ] ⪰ c_l I`, `E‖u_i‖² ≤ c_{u,i}` and
/// the fourth-moment constant `R²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseModel<T> {
    pub kind: NoiseKind,
    pub c_l: T,
    pub c_u: Vec<T>,
    pub r_sq: T,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(kind: NoiseKind, dims: &GameDims) -> Self {
        let max_d = dims.decision_dims().iter().copied().max().unwrap_or(1) as f64;
        let c_u = dims.decision_dims().iter().map(|&d| T::lit(d as f64)).collect();
        let r_sq = match kind {
            NoiseKind::GaussianIsotropic => T::lit(3.0 * max_d),
            NoiseKind::RademacherProduct => T::lit(max_d),
        };
        Self { kind, c_l: T::one(), c_u, r_sq }
    }

    /// Joint probe `u = (u_1, …, u_n)`.
    pub fn sample<R: Rng + ?Sized>(&self, dims: &std::sync::Arc<GameDims>, rng: &mut R) -> BlockVector<T> {
        let mut u = BlockVector::zeros(dims.clone());
        for v in u.as_mut_slice() {
            *v = match self.kind {
                NoiseKind::GaussianIsotropic => T::lit(rng.sample::<f64, _>(StandardNormal)),
                NoiseKind::RademacherProduct => {
                    if rng.random::<bool>() {
                        T::one()
                    } else {
                        -T::one()
                    }
                }
            };
        }
        u
    }
}

/// Rank-one least-squares step `Â + ν (b - Â u) uᵀ`.
pub fn online_ls_update<T: Scalar>(a_hat: &Matrix<T>, b: &[T], u: &[T], nu: T) -> Matrix<T> {
    let mut out = a_hat.clone();
    online_ls_update_in_place(&mut out, b, u, nu);
    out
}

pub fn online_ls_update_in_place<T: Scalar>(a_hat: &mut Matrix<T>, b: &[T], u: &[T], nu: T) {
    let mut r = b.to_vec();
    let au = a_hat.mul_vec(u);
    r.iter_mut().zip(au).for_each(|(a, v)| *a -= v);
    a_hat.rank_one_update(nu, &r, u);
}

#[derive(Debug, Clone)]
pub struct AdaptiveState<T> {
    pub x: BlockVector<T>,
    /// Estimates of `Ā_i`, each `m_i × d`.
    pub a_hat: Vec<Matrix<T>>,
    /// Iteration counter, starting at 1.
    pub t: usize,
    pub alpha: T,
    pub k0: T,
    pub q0: T,
    pub c_l: T,
    /// Envelope constant of the estimation error,
    /// `E‖Â^t - Ā‖²_F ≤ Z / (t + q_0)`.
    pub z: T,
}

impl<T: Scalar> AdaptiveState<T> {
    /// `α` and `L` are the strong-monotonicity and Lipschitz constants of the
    /// performative gradient map `D`.
    pub fn new(
        game: &GameInstance<T>,
        constants: &GameConstants<T>,
        noise: &NoiseModel<T>,
        x0: BlockVector<T>,
        a_hat: Vec<Matrix<T>>,
    ) -> Result<Self> {
        let alpha = constants.alpha_perf;
        if !(alpha > T::zero()) {
            return Err(GameError::AssumptionViolation {
                assumption: "game strongly monotone",
                detail: format!("smallest eigenvalue of the symmetrized Jacobian of D is {alpha}"),
            });
        }
        if a_hat.len() != game.players() {
            return Err(GameError::Config("one estimate per player is required".into()));
        }
        for (i, a) in a_hat.iter().enumerate() {
            if a.shape() != game.family().player(i).stacked().shape() {
                return Err(GameError::Config(format!("estimate for player {i} has the wrong shape")));
            }
        }
        let l = constants.lipschitz_perf;
        let k0 = T::one() + T::lit(8.0) * l * l / (alpha * alpha);
        let q0 = T::lit(2.0) * noise.r_sq / noise.c_l;
        let z = estimation_envelope(game, noise, &a_hat);
        Ok(Self { x: x0, a_hat, t: 1, alpha, k0, q0, c_l: noise.c_l, z })
    }

    /// Starts from `Â = 0`.
    pub fn from_zero(game: &GameInstance<T>, constants: &GameConstants<T>, noise: &NoiseModel<T>, x0: BlockVector<T>) -> Result<Self> {
        let a_hat = game.family().players().iter().map(|p| {
            let (r, c) = p.stacked().shape();
            Matrix::zeros(r, c)
        });
        Self::new(game, constants, noise, x0, a_hat.collect())
    }

    /// `η_t = 2 / (α (t + k_0 - 2))`
    pub fn eta(&self) -> T {
        T::lit(2.0) / (self.alpha * (T::lit(self.t as f64) + self.k0 - T::lit(2.0)))
    }

    /// `ν_t = 2 / (c_l (t + q_0))`
    pub fn nu(&self) -> T {
        T::lit(2.0) / (self.c_l * (T::lit(self.t as f64) + self.q0))
    }

    /// `Σ_i ‖Â_i - Ā_i‖²_F`
    pub fn estimation_error(&self, game: &GameInstance<T>) -> T {
        self.a_hat
            .iter()
            .enumerate()
            .map(|(i, a)| a.sub(game.family().player(i).stacked()).frobenius_sq())
            .sum()
    }
}

/// `Z = max{(1 + 2R²/c_l)‖Â¹ - Ā‖²_F, 8 Σ_i tr(Σ_i) c_{u,i} / c_l²}` where
/// `Σ_i` is the covariance of `z_i` at a fixed decision.
pub fn estimation_envelope<T: Scalar>(game: &GameInstance<T>, noise: &NoiseModel<T>, a_hat: &[Matrix<T>]) -> T {
    let init: T = a_hat
        .iter()
        .enumerate()
        .map(|(i, a)| a.sub(game.family().player(i).stacked()).frobenius_sq())
        .sum();
    let noise_term: T = (0..game.players())
        .map(|i| game.loss(i).data_cov_trace(game.family().player(i).base()) * noise.c_u[i])
        .sum();
    let first = (T::one() + T::lit(2.0) * noise.r_sq / noise.c_l) * init;
    let second = T::lit(8.0) * noise_term / (noise.c_l * noise.c_l);
    first.max(second)
}

/// Estimated total gradient `∇_i ℓ_i + Â_iiᵀ ∇_{z_i} ℓ_i`, using the columns of
/// `Â_i` that belong to player `i`.
fn estimated_direction<T: Scalar>(
    game: &GameInstance<T>,
    x: &BlockVector<T>,
    samples: &[crate::game::loss::Sample<T>],
    a_hat: &[Matrix<T>],
) -> BlockVector<T> {
    let mut out = game.zeros();
    for (i, s) in samples.iter().enumerate() {
        let mut g = game.loss_grad_x(i, x, s);
        let gz = game.loss_grad_z(i, x, s);
        let own = a_hat[i].columns(game.dims().block_range(i));
        own.tr_mul_vec_add(&gz, &mut g);
        out.block_mut(i).copy_from_slice(&g);
    }
    out
}

/// One iteration: draw the joint probe `u`, query `z ~ D(x)` and
/// `q ~ D(x + u)`, take the gradient step with the current estimates, then
/// update every `Â_i` against the full probe.
pub fn agm_step<T: Scalar, R: Rng + ?Sized>(game: &GameInstance<T>, state: &mut AdaptiveState<T>, noise: &NoiseModel<T>, rng: &mut R) {
    let u = noise.sample(&game.shared_dims(), rng);
    let x = &state.x;
    let z = game.sample_all(x, rng);
    let probe = x.add(&u);
    let q = game.sample_all(&probe, rng);

    let dir = estimated_direction(game, x, &z, &state.a_hat);
    let mut next = x.offset(-state.eta(), &dir);
    game.feasible().project_in_place(&mut next, T::zero());

    let nu = state.nu();
    for (i, a) in state.a_hat.iter_mut().enumerate() {
        let b = linalg::sub(&q[i].z, &z[i].z);
        online_ls_update_in_place(a, &b, u.as_slice(), nu);
    }
    state.x = next;
    state.t += 1;
}
