//! Problem constants derived from a game instance.

use serde::Serialize;

use crate::error::{GameError, Result};
use crate::game::instance::GameInstance;
use crate::game::loss::{LossModel, Sample};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameConstants<T> {
    /// Strong-monotonicity modulus of the static game `G(y)`.
    pub alpha: T,
    /// Lipschitz constants of `z_i ↦ ∇_i ℓ_i`.
    pub beta: Vec<T>,
    /// Distribution Lipschitz constants, `‖Ā_i‖_op`.
    pub gamma: Vec<T>,
    pub rho: T,
    /// Lipschitz constant of `x ↦ G_y(x)`.
    pub lipschitz: T,
    /// Per-player strong-convexity moduli of `x_i ↦ G_{i,y}(x)`.
    pub player_alpha: Vec<T>,
    /// `sqrt(Σ (β_i γ_i / α_i)²)`, for separable games with every `α_i > 0`.
    pub separable_rho: Option<T>,
    /// Bound on `E sqrt(Σ ‖∇_{z_i} ℓ_i‖²)` over `X`; needs a bounded set.
    pub delta_lip: Option<T>,
    /// Uniform bound on `sqrt(E‖g(x,z) - G_x(x)‖²)`; absent when the
    /// variance grows with `x`.
    pub sigma: Option<T>,
    /// Same bound for the total-gradient estimator
    /// `∇_i ℓ_i + A_iᵀ ∇_{z_i} ℓ_i`.
    pub sigma_nash: Option<T>,
    /// Smallest eigenvalue of the symmetric part of the Jacobian of `D`.
    pub alpha_perf: T,
    /// Largest singular value of the Jacobian of `D`.
    pub lipschitz_perf: T,
}

impl<T: Scalar> GameConstants<T> {
    /// `sqrt(Σ (β_i γ_i / α)²)`
    pub fn rho_from(alpha: T, beta: &[T], gamma: &[T]) -> T {
        beta.iter().zip(gamma).map(|(&b, &g)| (b * g / alpha).powi(2)).sum::<T>().sqrt()
    }

    /// `sqrt(Σ β_i² γ_i²)`, the Lipschitz constant of `y ↦ G_y(x)`.
    pub fn shift_lipschitz(&self) -> T {
        self.beta.iter().zip(&self.gamma).map(|(&b, &g)| (b * g).powi(2)).sum::<T>().sqrt()
    }

    /// Contraction factor of exact retraining: the separable factor when it
    /// is available and smaller.
    pub fn retrain_factor(&self) -> T {
        match self.separable_rho {
            Some(r) if r < self.rho => r,
            _ => self.rho,
        }
    }
}

/// Largest singular value through the eigenvalues of `AᵀA`.
fn spectral_norm<T: Scalar>(a: &Matrix<T>) -> T {
    linalg::lambda_max(&a.transpose().matmul(a)).max(T::zero()).sqrt()
}

fn sym_lambda_min<T: Scalar>(a: &Matrix<T>) -> T {
    linalg::lambda_min(&a.sym_part())
}

pub fn compute_constants<T: Scalar>(game: &GameInstance<T>) -> Result<GameConstants<T>> {
    let dims = game.dims();
    let n = dims.players();
    let jac = game.static_jacobian();
    let alpha = sym_lambda_min(&jac);
    if !(alpha > T::zero()) {
        return Err(GameError::AssumptionViolation {
            assumption: "static game strongly monotone",
            detail: format!("smallest eigenvalue of the symmetrized Jacobian is {alpha}"),
        });
    }
    let lipschitz = spectral_norm(&jac);
    let beta: Vec<T> = (0..n).map(|i| game.loss(i).z_lipschitz(dims, i)).collect();
    let gamma: Vec<T> = (0..n).map(|i| linalg::op_norm_power(game.family().player(i).stacked())).collect();
    let rho = GameConstants::rho_from(alpha, &beta, &gamma);

    let player_alpha: Vec<T> = (0..n)
        .map(|i| {
            let r = dims.block_range(i);
            sym_lambda_min(&jac.block(r.clone(), r))
        })
        .collect();
    let separable_rho = (game.separable() && player_alpha.iter().all(|&a| a > T::zero())).then(|| {
        beta.iter()
            .zip(&gamma)
            .zip(&player_alpha)
            .map(|((&b, &g), &a)| (b * g / a).powi(2))
            .sum::<T>()
            .sqrt()
    });

    let djac = game.performative_jacobian();
    let alpha_perf = sym_lambda_min(&djac);
    let lipschitz_perf = spectral_norm(&djac);

    let (sigma, sigma_nash) = variance_bounds(game);
    let delta_lip = delta_lip(game);

    Ok(GameConstants {
        alpha,
        beta,
        gamma,
        rho,
        lipschitz,
        player_alpha,
        separable_rho,
        delta_lip,
        sigma,
        sigma_nash,
        alpha_perf,
        lipschitz_perf,
    })
}

fn has_feature_noise<T: Scalar>(loss: &LossModel<T>) -> bool {
    matches!(loss, LossModel::StrategicPrediction { features, .. } if features.std > T::zero())
}

/// Derivatives of the sample gradients in `z_i` (both are affine in `z_i`
/// once the feature draw is fixed at its mean).
fn z_derivatives<T: Scalar>(game: &GameInstance<T>, i: usize) -> (Matrix<T>, Matrix<T>) {
    let (d_i, m_i) = (game.dims().decision_dim(i), game.dims().data_dim(i));
    let x = game.zeros();
    let at = |z: Vec<T>| {
        let s = Sample::data(z);
        (game.loss_grad_x(i, &x, &s), game.loss_grad_z(i, &x, &s))
    };
    let (gx0, gz0) = at(vec![T::zero(); m_i]);
    let mut px = Matrix::zeros(d_i, m_i);
    let mut pz = Matrix::zeros(m_i, m_i);
    for j in 0..m_i {
        let mut e = vec![T::zero(); m_i];
        e[j] = T::one();
        let (gx, gz) = at(e);
        px.set_column(j, &linalg::sub(&gx, &gx0));
        pz.set_column(j, &linalg::sub(&gz, &gz0));
    }
    (px, pz)
}

fn variance_bounds<T: Scalar>(game: &GameInstance<T>) -> (Option<T>, Option<T>) {
    if game.losses().iter().any(has_feature_noise) {
        return (None, None);
    }
    let mut var_g = T::zero();
    let mut var_w = T::zero();
    for i in 0..game.players() {
        let cov = game.family().player(i).base().covariance();
        let (px, pz) = z_derivatives(game, i);
        let own = game.family().player(i).own();
        let pw = px.add(&own.transpose().matmul(&pz));
        var_g += px.matmul(&cov).matmul(&px.transpose()).trace();
        var_w += pw.matmul(&cov).matmul(&pw.transpose()).trace();
    }
    (Some(var_g.max(T::zero()).sqrt()), Some(var_w.max(T::zero()).sqrt()))
}

fn delta_lip<T: Scalar>(game: &GameInstance<T>) -> Option<T> {
    let radius = game.feasible().bounding_radius()?;
    let dims = game.dims();
    // E ∇_z ℓ stacked over players is affine in x.
    let mean_grad = |x: &crate::game::dims::BlockVector<T>| -> Vec<T> {
        (0..game.players())
            .flat_map(|i| {
                let zhat = game.base_shift_mean(i, x);
                game.loss(i).expected_grad_z(dims, i, x, &zhat)
            })
            .collect()
    };
    let zero = game.zeros();
    let g0 = mean_grad(&zero);
    let d = dims.total();
    let mut jac = Matrix::zeros(g0.len(), d);
    for j in 0..d {
        let mut e = game.zeros();
        e.as_mut_slice()[j] = T::one();
        jac.set_column(j, &linalg::sub(&mean_grad(&e), &g0));
    }
    let mean_bound = linalg::norm(&g0) + spectral_norm(&jac) * radius;
    let mut var = T::zero();
    for i in 0..game.players() {
        let base = game.family().player(i).base();
        var += match game.loss(i) {
            LossModel::Revenue { .. } => T::zero(),
            LossModel::StrategicPrediction { features, truth } => {
                let m = T::lit(features.mean.cols() as f64);
                let reach = linalg::norm(truth) + radius;
                base.cov_trace() + m * features.std * features.std * reach * reach
            }
            LossModel::QuadraticCustom { .. } => {
                let (_, pz) = z_derivatives(game, i);
                pz.matmul(&base.covariance()).matmul(&pz.transpose()).trace()
            }
        };
    }
    Some((mean_bound * mean_bound + var).sqrt())
}
