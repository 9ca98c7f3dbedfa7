//! The decision-dependent game and its closed-form gradient maps.

use std::sync::Arc;

use rand::Rng;

use crate::error::{structural, Result};
use crate::game::dims::{BlockVector, GameDims};
use crate::game::family::LocationFamily;
use crate::game::feasible::FeasibleSet;
use crate::game::loss::{LossModel, Sample};
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct GameInstance<T> {
    dims: Arc<GameDims>,
    feasible: FeasibleSet<T>,
    family: LocationFamily<T>,
    losses: Vec<LossModel<T>>,
    separable: bool,
}

impl<T: Scalar> GameInstance<T> {
    /// Assembles a game after checking that every component agrees with
    /// `dims`. A `separable` flag is rejected when some loss couples players.
    pub fn new(
        dims: GameDims,
        feasible: FeasibleSet<T>,
        family: LocationFamily<T>,
        losses: Vec<LossModel<T>>,
        separable: bool,
    ) -> Result<Self> {
        let n = dims.players();
        if feasible.descriptors().len() != n || family.players().len() != n || losses.len() != n {
            return Err(structural(format!("game components must all describe {n} players")));
        }
        for (i, loss) in losses.iter().enumerate() {
            loss.validate(&dims, i)?;
            if separable && !loss.is_separable(&dims, i) {
                return Err(structural(format!("player {i}: loss depends on other players but game is marked separable")));
            }
        }
        Ok(Self { dims: Arc::new(dims), feasible, family, losses, separable })
    }

    pub fn dims(&self) -> &GameDims {
        &self.dims
    }

    pub fn shared_dims(&self) -> Arc<GameDims> {
        Arc::clone(&self.dims)
    }

    pub fn players(&self) -> usize {
        self.dims.players()
    }

    pub fn feasible(&self) -> &FeasibleSet<T> {
        &self.feasible
    }

    pub fn family(&self) -> &LocationFamily<T> {
        &self.family
    }

    pub fn losses(&self) -> &[LossModel<T>] {
        &self.losses
    }

    pub fn loss(&self, i: usize) -> &LossModel<T> {
        &self.losses[i]
    }

    pub fn separable(&self) -> bool {
        self.separable
    }

    pub fn zeros(&self) -> BlockVector<T> {
        BlockVector::zeros(self.shared_dims())
    }

    pub fn vector(&self, data: Vec<T>) -> Result<BlockVector<T>> {
        BlockVector::from_vec(self.shared_dims(), data)
    }

    fn check(&self, x: &BlockVector<T>) {
        assert_eq!(x.len(), self.dims.total(), "decision vector length does not match the game");
    }

    /// Mean of the non-feature part of `z_i` under `D_i(y)`: `μ_i + Ā_i y`.
    pub fn base_shift_mean(&self, i: usize, y: &BlockVector<T>) -> Vec<T> {
        let fam = self.family.player(i);
        let mut out = fam.base().mean().to_vec();
        fam.stacked().mul_vec_add(y.as_slice(), &mut out);
        out
    }

    /// `E_{D_i(y)} z_i`
    pub fn data_mean(&self, i: usize, y: &BlockVector<T>) -> Vec<T> {
        self.losses[i].data_mean(&self.base_shift_mean(i, y))
    }

    /// Draws one sample for player `i` from `D_i(x)`.
    pub fn sample_player<R: Rng + ?Sized>(&self, x: &BlockVector<T>, i: usize, rng: &mut R) -> Sample<T> {
        self.check(x);
        let fam = self.family.player(i);
        let shift = fam.shift(x);
        self.losses[i].sample_with(fam.base(), &shift, rng)
    }

    /// Draws `z_i ~ D_i(x)`.
    pub fn sample_distribution<R: Rng + ?Sized>(&self, x: &BlockVector<T>, i: usize, rng: &mut R) -> Vec<T> {
        self.sample_player(x, i, rng).z
    }

    /// One sample per player, in player order.
    pub fn sample_all<R: Rng + ?Sized>(&self, x: &BlockVector<T>, rng: &mut R) -> Vec<Sample<T>> {
        (0..self.players()).map(|i| self.sample_player(x, i, rng)).collect()
    }

    pub fn loss_value(&self, i: usize, x: &BlockVector<T>, s: &Sample<T>) -> T {
        self.losses[i].value(&self.dims, i, x, s)
    }

    pub fn loss_grad_x(&self, i: usize, x: &BlockVector<T>, s: &Sample<T>) -> Vec<T> {
        self.losses[i].grad_x(&self.dims, i, x, s)
    }

    pub fn loss_grad_z(&self, i: usize, x: &BlockVector<T>, s: &Sample<T>) -> Vec<T> {
        self.losses[i].grad_z(&self.dims, i, x, s)
    }

    /// Stacked sample gradients `(∇_i ℓ_i(x, z_i))_i`.
    pub fn sample_grad(&self, x: &BlockVector<T>, samples: &[Sample<T>]) -> BlockVector<T> {
        let mut out = self.zeros();
        for (i, s) in samples.iter().enumerate() {
            out.block_mut(i).copy_from_slice(&self.loss_grad_x(i, x, s));
        }
        out
    }

    /// Stacked unbiased estimates of `∇_i L_i(x)`:
    /// `w_i = ∇_i ℓ_i(x, z_i) + A_iᵀ ∇_{z_i} ℓ_i(x, z_i)`.
    pub fn sample_total_grad(&self, x: &BlockVector<T>, samples: &[Sample<T>]) -> BlockVector<T> {
        let mut out = self.zeros();
        for (i, s) in samples.iter().enumerate() {
            let mut g = self.loss_grad_x(i, x, s);
            let gz = self.loss_grad_z(i, x, s);
            self.family.player(i).own().tr_mul_vec_add(&gz, &mut g);
            out.block_mut(i).copy_from_slice(&g);
        }
        out
    }

    /// `G_y(x)`: individual gradients with distributions frozen at `D(y)`.
    pub fn static_grad_map(&self, y: &BlockVector<T>, x: &BlockVector<T>) -> BlockVector<T> {
        self.check(x);
        self.check(y);
        let mut out = self.zeros();
        for i in 0..self.players() {
            let zhat = self.base_shift_mean(i, y);
            let g = self.losses[i].expected_grad_x(&self.dims, i, x, &zhat);
            out.block_mut(i).copy_from_slice(&g);
        }
        out
    }

    /// `H_x(y)` with blocks `A_iᵀ E_{D_i(x)} ∇_{z_i} ℓ_i(y, z_i)`.
    pub fn h_map(&self, x: &BlockVector<T>, y: &BlockVector<T>) -> BlockVector<T> {
        self.check(x);
        self.check(y);
        let mut out = self.zeros();
        for i in 0..self.players() {
            let zhat = self.base_shift_mean(i, x);
            let gz = self.losses[i].expected_grad_z(&self.dims, i, y, &zhat);
            out.block_mut(i).copy_from_slice(&self.family.player(i).own().tr_mul_vec(&gz));
        }
        out
    }

    /// `D(x) = G_x(x) + H_x(x)`, the vector of full individual gradients
    /// `∇_i L_i(x)`.
    pub fn performative_grad_map(&self, x: &BlockVector<T>) -> BlockVector<T> {
        self.static_grad_map(x, x).add(&self.h_map(x, x))
    }

    /// Expected loss `L_i(x) = E_{D_i(x)} ℓ_i(x, z_i)`.
    pub fn expected_loss(&self, i: usize, x: &BlockVector<T>) -> T {
        let zhat = self.base_shift_mean(i, x);
        self.losses[i].expected_value(&self.dims, i, x, &zhat, self.family.player(i).base())
    }

    pub fn expected_losses(&self, x: &BlockVector<T>) -> Vec<T> {
        (0..self.players()).map(|i| self.expected_loss(i, x)).collect()
    }

    /// Social cost `S(x) = Σ_i L_i(x)`.
    pub fn social_cost(&self, x: &BlockVector<T>) -> T {
        self.expected_losses(x).into_iter().sum()
    }

    /// `∇S(x) = Σ_i (E ∇_x ℓ_i + Ā_iᵀ E ∇_{z_i} ℓ_i)`.
    pub fn social_grad(&self, x: &BlockVector<T>) -> BlockVector<T> {
        self.check(x);
        let mut acc = vec![T::zero(); self.dims.total()];
        for i in 0..self.players() {
            let zhat = self.base_shift_mean(i, x);
            let gx = self.losses[i].expected_grad_x_full(&self.dims, i, x, &zhat);
            linalg::axpy(T::one(), &gx, &mut acc);
            let gz = self.losses[i].expected_grad_z(&self.dims, i, x, &zhat);
            self.family.player(i).stacked().tr_mul_vec_add(&gz, &mut acc);
        }
        BlockVector::from_vec(self.shared_dims(), acc).expect("length matches dims")
    }

    /// Jacobian of an affine map on decision space, read off column by column.
    pub fn affine_jacobian(&self, f: impl Fn(&BlockVector<T>) -> BlockVector<T>) -> Matrix<T> {
        let d = self.dims.total();
        let zero = self.zeros();
        let f0 = f(&zero);
        let mut jac = Matrix::zeros(d, d);
        for j in 0..d {
            let mut e = self.zeros();
            e.as_mut_slice()[j] = T::one();
            let col = linalg::sub(f(&e).as_slice(), f0.as_slice());
            jac.set_column(j, &col);
        }
        jac
    }

    /// Constant Jacobian of `x ↦ G_y(x)` (independent of `y`).
    pub fn static_jacobian(&self) -> Matrix<T> {
        let y = self.zeros();
        self.affine_jacobian(|x| self.static_grad_map(&y, x))
    }

    /// Constant Jacobian of `y ↦ G_y(x)` (independent of `x`).
    pub fn shift_jacobian(&self) -> Matrix<T> {
        let x = self.zeros();
        self.affine_jacobian(|y| self.static_grad_map(y, &x))
    }

    /// Jacobian of the performative gradient map `D`.
    pub fn performative_jacobian(&self) -> Matrix<T> {
        self.affine_jacobian(|x| self.performative_grad_map(x))
    }

    /// Jacobian of the map `x ↦ G_x(x)` whose zeros are stable points.
    pub fn stable_jacobian(&self) -> Matrix<T> {
        self.affine_jacobian(|x| self.static_grad_map(x, x))
    }

    /// Hessian of the social cost.
    pub fn social_hessian(&self) -> Matrix<T> {
        self.affine_jacobian(|x| self.social_grad(x))
    }
}
