//! Small reference instances with hand-derived equilibria.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::game::{
    BaseDistribution, FeasibleSet, GameDims, GameInstance, LocationFamily, LossModel, PlayerFamily, SetDescriptor,
};
use crate::game::loss::FeatureModel;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Symmetric revenue game with scalar decisions: `z_i = ζ_i + a x_i + b Σ_{j≠i} x_j`,
/// `ζ_i ~ N(μ, s²)` (deterministic when `s = 0`), loss
/// `-c z_i x_i + (λ/2) x_i²`, and optional box `[-bound, bound]` per player.
#[allow(clippy::too_many_arguments)]
pub fn scalar_revenue<T: Scalar>(
    players: usize,
    mu: f64,
    own: f64,
    cross: f64,
    lambda: f64,
    scale: f64,
    std: f64,
    bound: Option<f64>,
) -> Result<GameInstance<T>> {
    let dims = GameDims::uniform(players, 1, 1)?;
    let set = match bound {
        Some(b) => SetDescriptor::Box { lower: vec![T::lit(-b)], upper: vec![T::lit(b)] },
        None => SetDescriptor::WholeSpace,
    };
    let feasible = FeasibleSet::new(&dims, vec![set; players])?;
    let fams = (0..players)
        .map(|i| {
            let base = if std == 0.0 {
                BaseDistribution::deterministic(vec![T::lit(mu)])
            } else {
                BaseDistribution::isotropic(vec![T::lit(mu)], T::lit(std))
            };
            PlayerFamily::new(
                &dims,
                i,
                base,
                Matrix::from_diagonal(&[T::lit(own)]),
                Matrix::from_fn(1, players - 1, |_, _| T::lit(cross)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let family = LocationFamily::new(&dims, fams)?;
    let losses = vec![LossModel::revenue(T::lit(lambda), T::lit(scale)); players];
    GameInstance::new(dims, feasible, family, losses, true)
}

/// The two-player scalar duopoly: `μ = 1`, `A_i = [-1]`, `A_{-i} = [0.5]`,
/// `λ = 2`, `c = 1`, base noise `N(1, 0.1²)`.
///
/// Equilibria: `x^ne = (2/7, 2/7)`, `x^ps = (0.4, 0.4)`, `x^so = (1/3, 1/3)`.
pub fn scalar_duopoly<T: Scalar>() -> GameInstance<T> {
    scalar_revenue(2, 1.0, -1.0, 0.5, 2.0, 1.0, 0.1, None).expect("valid reference instance")
}

/// [`scalar_duopoly`] restricted to `[-bound, bound]` per player.
pub fn scalar_duopoly_boxed<T: Scalar>(bound: f64) -> GameInstance<T> {
    scalar_revenue(2, 1.0, -1.0, 0.5, 2.0, 1.0, 0.1, Some(bound)).expect("valid reference instance")
}

/// Two strategic-prediction players with `d_i = m_i = dim`, features fixed at
/// the identity, `A_i = I`, `A_{-i} = cross·I`, truth `b_i = (1, …, 1)` and
/// isotropic base noise of standard deviation `std` around zero.
pub fn strategic_pair<T: Scalar>(dim: usize, cross: f64, std: f64) -> Result<GameInstance<T>> {
    let dims = GameDims::uniform(2, dim, dim)?;
    let feasible = FeasibleSet::whole_space(&dims);
    let eye = Matrix::<T>::identity(dim);
    let fams = (0..2)
        .map(|i| {
            PlayerFamily::new(
                &dims,
                i,
                BaseDistribution::isotropic(vec![T::zero(); dim], T::lit(std)),
                eye.clone(),
                eye.scaled(T::lit(cross)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let family = LocationFamily::new(&dims, fams)?;
    let loss = LossModel::StrategicPrediction { features: FeatureModel::fixed(eye.clone()), truth: vec![T::one(); dim] };
    GameInstance::new(dims, feasible, family, vec![loss.clone(), loss], true)
}

/// Single player with `ℓ(x, z) = ½ xᵀ diag(1, 2) x - zᵀx`, `z = ζ + 0.25 x`,
/// `ζ ~ N(0, 0.5 I)`. Constants: `α = 1`, `L = 2`, `β = 1`, `γ = 0.25`,
/// `ρ = 0.25`, `σ = 1`.
pub fn quadratic_single<T: Scalar>() -> GameInstance<T> {
    let dims = GameDims::uniform(1, 2, 2).expect("valid dims");
    let feasible = FeasibleSet::whole_space(&dims);
    let base = BaseDistribution::isotropic(vec![T::zero(); 2], T::lit(0.5f64.sqrt()));
    let fam = PlayerFamily::new(&dims, 0, base, Matrix::identity(2).scaled(T::lit(0.25)), Matrix::zeros(2, 0))
        .expect("valid family");
    let family = LocationFamily::new(&dims, vec![fam]).expect("one player");
    // v = (x, z): H = [[diag(1,2), -I], [-I, 0]]
    let hessian = Matrix::from_fn(4, 4, |r, c| match (r, c) {
        (0, 0) => T::one(),
        (1, 1) => T::lit(2.0),
        (0, 2) | (1, 3) | (2, 0) | (3, 1) => -T::one(),
        _ => T::zero(),
    });
    let loss = LossModel::QuadraticCustom { hessian, linear: vec![T::zero(); 4] };
    GameInstance::new(dims, feasible, family, vec![loss], true).expect("valid reference instance")
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn gaussian_matrix<T: Scalar, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> Matrix<T> {
    let raw: Vec<f64> = (0..rows * cols).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_fn(rows, cols, |r, c| T::lit(raw[r * cols + c]))
}

fn rescale_family<T: Scalar>(dims: &GameDims, fams: Vec<PlayerFamily<T>>, s: T) -> Result<Vec<PlayerFamily<T>>> {
    fams.into_iter()
        .enumerate()
        .map(|(i, p)| PlayerFamily::new(dims, i, p.base().clone(), p.own().scaled(s), p.cross().scaled(s)))
        .collect()
}

/// Random game with affine gradients: 1 to 3 players with decisions of
/// dimension 1 or 2, revenue or strategic-prediction losses, Gaussian bases,
/// and performative effects rescaled so that `ρ` equals `target_rho`. With
/// `constrained`, each player gets a random box around the origin. Badly
/// conditioned draws are rejected.
pub fn random_affine<T: Scalar, R: Rng + ?Sized>(rng: &mut R, target_rho: f64, constrained: bool) -> Result<GameInstance<T>> {
    loop {
        if let Some(game) = random_affine_draw(rng, target_rho, constrained)? {
            return Ok(game);
        }
    }
}

/// Draws are rejected when `α/L` of the static game falls below this.
const MIN_CONDITIONING: f64 = 0.02;

fn random_affine_draw<T: Scalar, R: Rng + ?Sized>(rng: &mut R, target_rho: f64, constrained: bool) -> Result<Option<GameInstance<T>>> {
    let n = rng.random_range(1..=3usize);
    let decision: Vec<usize> = (0..n).map(|_| rng.random_range(1..=2usize)).collect();
    let strategic: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let data: Vec<usize> =
        (0..n).map(|i| if strategic[i] { rng.random_range(1..=3usize) } else { decision[i] }).collect();
    let dims = GameDims::new(decision.clone(), data.clone())?;
    let sets = (0..n)
        .map(|i| {
            if constrained {
                let lower = (0..decision[i]).map(|_| T::lit(uniform(rng, -2.0, -0.5))).collect();
                let upper = (0..decision[i]).map(|_| T::lit(uniform(rng, 0.5, 2.0))).collect();
                SetDescriptor::Box { lower, upper }
            } else {
                SetDescriptor::WholeSpace
            }
        })
        .collect();
    let feasible = FeasibleSet::new(&dims, sets)?;
    let mut fams = Vec::with_capacity(n);
    let mut losses = Vec::with_capacity(n);
    for i in 0..n {
        let (d_i, m_i) = (decision[i], data[i]);
        let mean: Vec<T> = (0..m_i).map(|_| T::lit(uniform(rng, -1.0, 1.0))).collect();
        let base = BaseDistribution::isotropic(mean, T::lit(uniform(rng, 0.05, 0.3)));
        let own = gaussian_matrix(rng, m_i, d_i, 1.0);
        let cross = gaussian_matrix(rng, m_i, dims.others_dim(i), 0.5);
        fams.push(PlayerFamily::new(&dims, i, base, own, cross)?);
        losses.push(if strategic[i] {
            let mut mean = gaussian_matrix::<T, _>(rng, d_i, m_i, 0.5);
            for k in 0..d_i.min(m_i) {
                mean[(k, k)] += T::one();
            }
            let std = T::lit(uniform(rng, 0.0, 0.2));
            let truth = (0..d_i).map(|_| T::lit(uniform(rng, -1.0, 1.0))).collect();
            LossModel::StrategicPrediction { features: FeatureModel { mean, std }, truth }
        } else {
            LossModel::revenue(T::lit(uniform(rng, 0.5, 3.0)), T::one())
        });
    }
    let probe = GameInstance::new(dims.clone(), feasible.clone(), LocationFamily::new(&dims, fams.clone())?, losses.clone(), true)?;
    let constants = match crate::game::compute_constants(&probe) {
        Ok(c) if c.alpha >= T::lit(MIN_CONDITIONING) * c.lipschitz => c,
        _ => return Ok(None),
    };
    let rho = constants.rho;
    let scale = if rho > T::zero() { T::lit(target_rho) / rho } else { T::one() };
    let family = LocationFamily::new(&dims, rescale_family(&dims, fams, scale)?)?;
    GameInstance::new(dims, feasible, family, losses, true).map(Some)
}

/// Random strategic-prediction game that passes the monotonicity
/// certificate: well-conditioned own effects, competitor effects small enough
/// for the spectral condition, and a common rescaling to `ρ = target_rho`
/// (which must lie below ½).
pub fn random_certified_strategic<T: Scalar, R: Rng + ?Sized>(
    rng: &mut R,
    players: usize,
    decision: usize,
    data: usize,
    target_rho: f64,
) -> Result<GameInstance<T>> {
    let dims = GameDims::uniform(players, decision, data)?;
    loop {
        let mut fams = Vec::with_capacity(players);
        let mut losses = Vec::with_capacity(players);
        for i in 0..players {
            let mut own = gaussian_matrix::<T, _>(rng, data, decision, 0.3);
            for k in 0..decision.min(data) {
                own[(k, k)] += T::one();
            }
            let cross = gaussian_matrix(rng, data, dims.others_dim(i), 0.15);
            let mean = (0..data).map(|_| T::lit(uniform(rng, -1.0, 1.0))).collect();
            let base = BaseDistribution::isotropic(mean, T::lit(uniform(rng, 0.05, 0.3)));
            fams.push(PlayerFamily::new(&dims, i, base, own, cross)?);
            let mut feat = gaussian_matrix::<T, _>(rng, decision, data, 0.3);
            for k in 0..decision.min(data) {
                feat[(k, k)] += T::one();
            }
            let truth = (0..decision).map(|_| T::lit(uniform(rng, -1.0, 1.0))).collect();
            losses.push(LossModel::StrategicPrediction {
                features: FeatureModel { mean: feat, std: T::lit(uniform(rng, 0.0, 0.2)) },
                truth,
            });
        }
        let feasible = FeasibleSet::whole_space(&dims);
        let probe = GameInstance::new(dims.clone(), feasible.clone(), LocationFamily::new(&dims, fams.clone())?, losses.clone(), true)?;
        let constants = crate::game::compute_constants(&probe)?;
        let scale = T::lit(target_rho) / constants.rho;
        let family = LocationFamily::new(&dims, rescale_family(&dims, fams, scale)?)?;
        let game = GameInstance::new(dims.clone(), feasible, family, losses, true)?;
        let constants = crate::game::compute_constants(&game)?;
        if crate::oracles::certify_monotone(&game, &constants).passed {
            return Ok(game);
        }
    }
}
