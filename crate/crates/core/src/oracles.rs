//! Ground-truth equilibria and monotonicity certificates for games whose
//! gradient maps are affine.

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::constants::GameConstants;
use crate::game::dims::BlockVector;
use crate::game::instance::GameInstance;
use crate::game::loss::LossModel;
use crate::linalg::{self, Lu, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Nash,
    PerfStable,
    SocialOpt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    LinearSolve,
    FixedPointIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport<T> {
    pub kind: EquilibriumKind,
    pub point: BlockVector<T>,
    /// Projected first-order residual `‖x - proj(x - F(x))‖` of the defining map.
    pub residual: T,
    pub solver: SolveMethod,
}

const MAX_ITERATIONS: usize = 2_000_000;
const STALL_WINDOW: usize = 200;

/// Accuracy targeted by the oracles, floored at what the precision allows.
fn oracle_tol<T: Scalar>() -> T {
    T::achievable(1e-12)
}

/// `‖x - proj_X(x - F(x))‖`
pub fn projected_residual<T: Scalar>(game: &GameInstance<T>, x: &BlockVector<T>, fx: &BlockVector<T>) -> T {
    let mut y = x.sub(fx);
    game.feasible().project_in_place(&mut y, T::zero());
    x.dist(&y)
}

/// Step size and contraction factor of the projected iteration
/// `x ← proj(x - η F(x))` for an affine map with Jacobian `jac`.
/// Returns `None` unless the map is strongly monotone.
pub fn contraction_params<T: Scalar>(jac: &Matrix<T>) -> Option<(T, T)> {
    AffineVi::new(jac).map(|vi| (vi.step, vi.q))
}

/// Solver for the variational inequality `0 ∈ F(x) + N_X(x)` with an affine,
/// strongly monotone `F`.
///
/// Symmetric Jacobians use projected gradient steps `2/(α+L)`. Otherwise the
/// plain projected iteration contracts only like `1 - α²/L²`, so extragradient
/// steps are used instead and stopping relies on the error bound
/// `‖x - x*‖ ≤ (1+L)/α · ‖x - proj(x - F(x))‖`.
#[derive(Debug, Clone, Copy)]
pub struct AffineVi<T> {
    pub alpha: T,
    pub lipschitz: T,
    pub symmetric: bool,
    pub step: T,
    pub q: T,
}

impl<T: Scalar> AffineVi<T> {
    pub fn new(jac: &Matrix<T>) -> Option<Self> {
        let alpha = linalg::lambda_min(&jac.sym_part());
        if !(alpha > T::zero()) {
            return None;
        }
        let lip = linalg::lambda_max(&jac.transpose().matmul(jac)).max(T::zero()).sqrt().max(alpha);
        let asym = jac.sub(&jac.transpose()).max_abs();
        let symmetric = asym <= T::epsilon() * T::lit(16.0) * jac.max_abs();
        let (step, q) = if symmetric {
            (T::lit(2.0) / (alpha + lip), (lip - alpha) / (lip + alpha))
        } else {
            (alpha / (lip * lip), (T::one() - (alpha / lip).powi(2)).max(T::zero()).sqrt())
        };
        Some(Self { alpha, lipschitz: lip, symmetric, step, q })
    }

    pub fn solve(
        &self,
        game: &GameInstance<T>,
        x0: BlockVector<T>,
        f: impl Fn(&BlockVector<T>) -> BlockVector<T>,
        tol: T,
    ) -> Result<(BlockVector<T>, usize)> {
        if self.symmetric {
            projected_iteration(game, x0, f, self.step, self.q, tol)
        } else {
            self.extragradient(game, x0, f, tol)
        }
    }

    fn extragradient(
        &self,
        game: &GameInstance<T>,
        x0: BlockVector<T>,
        f: impl Fn(&BlockVector<T>) -> BlockVector<T>,
        tol: T,
    ) -> Result<(BlockVector<T>, usize)> {
        let eta = T::lit(0.5) / self.lipschitz;
        let bound = (T::one() + self.lipschitz) / self.alpha;
        let mut x = x0;
        game.feasible().project_in_place(&mut x, T::zero());
        let mut best = T::infinity();
        let mut since_best = 0;
        let mut last = T::infinity();
        for it in 1..=MAX_ITERATIONS {
            let fx = f(&x);
            let r = projected_residual(game, &x, &fx);
            last = r;
            if r * bound <= tol || r == T::zero() {
                return Ok((x, it));
            }
            if !r.is_finite() {
                break;
            }
            if r < best {
                best = r;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best > STALL_WINDOW {
                    if r <= T::epsilon() * T::lit(64.0) * x.norm().max(T::one()) * self.lipschitz / self.alpha {
                        return Ok((x, it));
                    }
                    return Err(GameError::InnerSolveFailure { iterations: it, residual: r.as_f64() });
                }
            }
            let mut mid = x.offset(-eta, &fx);
            game.feasible().project_in_place(&mut mid, T::zero());
            let mut next = x.offset(-eta, &f(&mid));
            game.feasible().project_in_place(&mut next, T::zero());
            x = next;
        }
        Err(GameError::InnerSolveFailure { iterations: MAX_ITERATIONS, residual: last.as_f64() })
    }
}

/// Runs `x ← proj(x - step·F(x))` until the a-posteriori bound
/// `q/(1-q)·‖x⁺ - x‖` falls below `tol`. Fails when the steps stop shrinking
/// above roundoff level.
pub fn projected_iteration<T: Scalar>(
    game: &GameInstance<T>,
    x0: BlockVector<T>,
    f: impl Fn(&BlockVector<T>) -> BlockVector<T>,
    step: T,
    q: T,
    tol: T,
) -> Result<(BlockVector<T>, usize)> {
    let mut x = x0;
    game.feasible().project_in_place(&mut x, T::zero());
    let factor = if q < T::one() { q / (T::one() - q) } else { T::infinity() };
    let mut best = T::infinity();
    let mut since_best = 0;
    let mut last = T::infinity();
    for it in 1..=MAX_ITERATIONS {
        let mut next = x.offset(-step, &f(&x));
        game.feasible().project_in_place(&mut next, T::zero());
        let moved = next.dist(&x);
        x = next;
        last = moved;
        if moved * factor <= tol || moved == T::zero() {
            return Ok((x, it));
        }
        if !moved.is_finite() {
            break;
        }
        if moved < best {
            best = moved;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > STALL_WINDOW {
                // Steps at roundoff level, amplified by the conditioning: the
                // iterate is as accurate as the precision allows.
                let floor = T::epsilon() * T::lit(64.0) * x.norm().max(T::one()) / (T::one() - q).max(T::epsilon());
                if moved <= floor {
                    return Ok((x, it));
                }
                return Err(GameError::InnerSolveFailure { iterations: it, residual: moved.as_f64() });
            }
        }
    }
    Err(GameError::InnerSolveFailure { iterations: MAX_ITERATIONS, residual: last.as_f64() })
}

/// Solves `J x = -f(0)` for an affine `f` with one step of iterative
/// refinement.
fn affine_root<T: Scalar>(
    game: &GameInstance<T>,
    lu: &Lu<T>,
    f: impl Fn(&BlockVector<T>) -> BlockVector<T>,
) -> BlockVector<T> {
    let f0 = f(&game.zeros());
    let rhs: Vec<T> = f0.as_slice().iter().map(|&v| -v).collect();
    let mut x = game.vector(lu.solve(&rhs)).expect("solution has decision length");
    let r = f(&x);
    let corr = lu.solve(r.as_slice());
    for (a, c) in x.as_mut_slice().iter_mut().zip(corr) {
        *a -= c;
    }
    x
}

/// Nash equilibrium of the static game `G(y)` (distributions frozen at `y`).
///
/// Reuses a factorization of the static Jacobian on unconstrained games and
/// otherwise runs projected gradient steps.
#[derive(Debug, Clone)]
pub struct StaticNashSolver<T> {
    lu: Option<Lu<T>>,
    vi: AffineVi<T>,
}

impl<T: Scalar> StaticNashSolver<T> {
    pub fn new(game: &GameInstance<T>) -> Result<Self> {
        let jac = game.static_jacobian();
        let Some(vi) = AffineVi::new(&jac) else {
            return Err(GameError::AssumptionViolation {
                assumption: "static game strongly monotone",
                detail: "symmetrized static Jacobian is not positive definite".into(),
            });
        };
        let lu = if game.feasible().is_whole_space() { Some(Lu::factor(&jac)?) } else { None };
        Ok(Self { lu, vi })
    }

    /// Returns the equilibrium of `G(y)` and the number of inner iterations.
    pub fn solve(&self, game: &GameInstance<T>, y: &BlockVector<T>, warm: &BlockVector<T>, tol: T) -> Result<(BlockVector<T>, usize)> {
        match &self.lu {
            Some(lu) => Ok((affine_root(game, lu, |x| game.static_grad_map(y, x)), 1)),
            None => self.vi.solve(game, warm.clone(), |x| game.static_grad_map(y, x), tol),
        }
    }
}

fn require_player_convexity<T: Scalar>(game: &GameInstance<T>, jac: &Matrix<T>) -> Result<()> {
    for i in 0..game.players() {
        let r = game.dims().block_range(i);
        let lmin = linalg::lambda_min(&jac.block(r.clone(), r).sym_part());
        if !(lmin > T::zero()) {
            return Err(GameError::NoCertifiedSolution(format!(
                "player {i}'s expected loss is not strongly convex in its own decision (min eigenvalue {lmin})"
            )));
        }
    }
    Ok(())
}

pub fn solve_nash<T: Scalar>(game: &GameInstance<T>) -> Result<EquilibriumReport<T>> {
    let jac = game.performative_jacobian();
    require_player_convexity(game, &jac)?;
    let d = |x: &BlockVector<T>| game.performative_grad_map(x);
    let (point, solver) = if game.feasible().is_whole_space() {
        let lu = Lu::factor(&jac)?;
        (affine_root(game, &lu, d), SolveMethod::LinearSolve)
    } else {
        let vi = AffineVi::new(&jac).ok_or_else(|| {
            GameError::NoCertifiedSolution("performative gradient map is not strongly monotone on a constrained set".into())
        })?;
        let (x, _) = vi
            .solve(game, game.zeros(), d, oracle_tol())
            .map_err(|e| GameError::NoCertifiedSolution(format!("projected gradient on D did not converge: {e}")))?;
        (x, SolveMethod::FixedPointIteration)
    };
    let residual = projected_residual(game, &point, &d(&point));
    Ok(EquilibriumReport { kind: EquilibriumKind::Nash, point, residual, solver })
}

/// Performatively stable point, by linear solve when the game is
/// unconstrained and otherwise by repeated exact retraining.
pub fn solve_perf_stable<T: Scalar>(game: &GameInstance<T>) -> Result<EquilibriumReport<T>> {
    let method = if game.feasible().is_whole_space() { SolveMethod::LinearSolve } else { SolveMethod::FixedPointIteration };
    solve_perf_stable_with(game, method)
}

pub fn solve_perf_stable_with<T: Scalar>(game: &GameInstance<T>, method: SolveMethod) -> Result<EquilibriumReport<T>> {
    let f = |x: &BlockVector<T>| game.static_grad_map(x, x);
    let jac = game.stable_jacobian();
    let point = match method {
        SolveMethod::LinearSolve if game.feasible().is_whole_space() => {
            let lu = Lu::factor(&jac).map_err(|_| {
                GameError::NoCertifiedSolution("stable-point linear system is singular".into())
            })?;
            affine_root(game, &lu, f)
        }
        SolveMethod::LinearSolve => {
            // A constrained stable point is the zero of a projected residual;
            // a strongly monotone G_x(x) lets projected gradient find it.
            let vi = AffineVi::new(&jac).ok_or_else(|| {
                GameError::NoCertifiedSolution("x -> G_x(x) is not strongly monotone on a constrained set".into())
            })?;
            vi.solve(game, game.zeros(), f, oracle_tol())?.0
        }
        SolveMethod::FixedPointIteration => fixed_point_retraining(game)?,
    };
    // One exact retraining step from the candidate must return it.
    let solver = StaticNashSolver::new(game)?;
    let (again, _) = solver.solve(game, &point, &point, oracle_tol())?;
    let gap = again.dist(&point);
    let allowed = T::lit(1e-9).max(T::epsilon() * T::lit(1e4)) * point.norm().max(T::one());
    if !(gap <= allowed) {
        return Err(GameError::NoCertifiedSolution(format!(
            "retraining moves the candidate stable point by {gap}"
        )));
    }
    let residual = projected_residual(game, &point, &f(&point));
    Ok(EquilibriumReport { kind: EquilibriumKind::PerfStable, point, residual, solver: method })
}

fn fixed_point_retraining<T: Scalar>(game: &GameInstance<T>) -> Result<BlockVector<T>> {
    let constants = crate::game::constants::compute_constants(game)?;
    let r = constants.retrain_factor();
    if !(r < T::one()) {
        return Err(GameError::NoCertifiedSolution(format!(
            "retraining is not a contraction (rho = {}) and no linear solve applies",
            constants.rho
        )));
    }
    let solver = StaticNashSolver::new(game)?;
    let tol = oracle_tol::<T>();
    let inner = tol * (T::one() - r) * T::lit(0.1);
    let factor = r / (T::one() - r);
    let mut x = game.zeros();
    game.feasible().project_in_place(&mut x, T::zero());
    for _ in 0..MAX_ITERATIONS {
        let (next, _) = solver.solve(game, &x, &x, inner.max(T::tol_floor() * T::lit(1e-3)))?;
        let moved = next.dist(&x);
        x = next;
        if moved * factor <= tol || moved == T::zero() {
            return Ok(x);
        }
        if !moved.is_finite() {
            break;
        }
    }
    Err(GameError::NoCertifiedSolution("repeated retraining did not converge".into()))
}

pub fn solve_social_opt<T: Scalar>(game: &GameInstance<T>) -> Result<EquilibriumReport<T>> {
    let hess = game.social_hessian().sym_part();
    let lmin = linalg::lambda_min(&hess);
    if !(lmin > T::zero()) {
        return Err(GameError::NoCertifiedSolution(format!(
            "social cost Hessian is not positive definite (min eigenvalue {lmin})"
        )));
    }
    let g = |x: &BlockVector<T>| game.social_grad(x);
    let (point, solver) = if game.feasible().is_whole_space() {
        let lu = Lu::factor(&hess)?;
        (affine_root(game, &lu, g), SolveMethod::LinearSolve)
    } else {
        let vi = AffineVi::new(&hess).expect("positive definite Hessian");
        (vi.solve(game, game.zeros(), g, oracle_tol())?.0, SolveMethod::FixedPointIteration)
    };
    let residual = projected_residual(game, &point, &g(&point));
    Ok(EquilibriumReport { kind: EquilibriumKind::SocialOpt, point, residual, solver })
}

pub fn solve<T: Scalar>(game: &GameInstance<T>, kind: EquilibriumKind) -> Result<EquilibriumReport<T>> {
    match kind {
        EquilibriumKind::Nash => solve_nash(game),
        EquilibriumKind::PerfStable => solve_perf_stable(game),
        EquilibriumKind::SocialOpt => solve_social_opt(game),
    }
}

/// Why the map `x ↦ H_x(y)` is known to be monotone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HMonotone {
    ConstantMap,
    SufficientSpectralCondition,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityCertificate<T> {
    pub rho: T,
    pub rho_ok: bool,
    pub h_monotone: HMonotone,
    /// `(1 - 2ρ)α` when the certificate passes.
    pub modulus: Option<T>,
    /// `min λ_min(A_iᵀA_i) - sqrt(n-1)·max ‖A_{-i}ᵀA_i‖_op` for strategic
    /// prediction games.
    pub spectral_gap: Option<T>,
    pub passed: bool,
}

/// Sufficient check that the performative game `D` is strongly monotone.
pub fn certify_monotone<T: Scalar>(game: &GameInstance<T>, constants: &GameConstants<T>) -> MonotonicityCertificate<T> {
    let n = game.players();
    let rho = constants.rho;
    let rho_ok = rho < T::lit(0.5);
    let losses = game.losses();
    let mut spectral_gap = None;
    let h_monotone = if losses.iter().all(|l| matches!(l, LossModel::Revenue { .. })) {
        HMonotone::ConstantMap
    } else if losses.iter().all(|l| matches!(l, LossModel::StrategicPrediction { .. })) {
        let fam = game.family();
        let min_own = (0..n)
            .map(|i| {
                let a = fam.player(i).own();
                linalg::lambda_min(&a.transpose().matmul(a))
            })
            .fold(T::infinity(), T::min);
        let max_cross = (0..n)
            .map(|i| {
                let p = fam.player(i);
                if p.cross().cols() == 0 {
                    T::zero()
                } else {
                    let m = p.cross().transpose().matmul(p.own());
                    linalg::lambda_max(&m.transpose().matmul(&m)).max(T::zero()).sqrt()
                }
            })
            .fold(T::zero(), T::max);
        let gap = min_own - T::lit((n - 1) as f64).sqrt() * max_cross;
        spectral_gap = Some(gap);
        if gap >= T::zero() {
            HMonotone::SufficientSpectralCondition
        } else {
            HMonotone::Unknown
        }
    } else if losses.iter().all(|l| quadratic_h_constant(game, l)) {
        HMonotone::ConstantMap
    } else {
        HMonotone::Unknown
    };
    let passed = rho_ok && h_monotone != HMonotone::Unknown;
    let modulus = passed.then(|| (T::one() - T::lit(2.0) * rho) * constants.alpha);
    MonotonicityCertificate { rho, rho_ok, h_monotone, modulus, spectral_gap, passed }
}

/// Revenue losses and quadratics without a `z_i z_iᵀ` term give an `H_x(y)`
/// that does not depend on `x`.
fn quadratic_h_constant<T: Scalar>(game: &GameInstance<T>, loss: &LossModel<T>) -> bool {
    match loss {
        LossModel::Revenue { .. } => true,
        LossModel::QuadraticCustom { hessian, .. } => {
            let d = game.dims().total();
            let k = hessian.rows();
            hessian.block(d..k, d..k).is_zero()
        }
        LossModel::StrategicPrediction { .. } => false,
    }
}
