//! Per-player loss models. Every variant has gradients that are affine in
//! `(x, z)`, so expectations under a location family are available in closed
//! form from the first two moments of the base distribution.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{structural, Result};
use crate::game::dims::{BlockVector, GameDims};
use crate::game::family::BaseDistribution;
use crate::linalg::{self, Matrix};
use crate::scalar::Scalar;

/// Distribution of the feature matrix `Θ` (`d_i × m_i`) in strategic
/// prediction: entries are `Θ̄ + s·N(0,1)` independently.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureModel<T> {
    pub mean: Matrix<T>,
    pub std: T,
}

impl<T: Scalar> FeatureModel<T> {
    pub fn fixed(mean: Matrix<T>) -> Self {
        Self { mean, std: T::zero() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix<T> {
        if self.std == T::zero() {
            return self.mean.clone();
        }
        let (r, c) = self.mean.shape();
        Matrix::from_fn(r, c, |a, b| self.mean[(a, b)] + self.std * T::lit(rng.sample::<f64, _>(StandardNormal)))
    }

    /// `E[Θ Θᵀ] = Θ̄ Θ̄ᵀ + m s² I`
    pub fn second_moment(&self) -> Matrix<T> {
        let (d, m) = self.mean.shape();
        let mut out = self.mean.matmul(&self.mean.transpose());
        let v = T::lit(m as f64) * self.std * self.std;
        for k in 0..d {
            out[(k, k)] += v;
        }
        out
    }
}

/// One draw from player `i`'s data distribution. Strategic prediction draws
/// the pair `(Θ, z_i)`; other models only carry `z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub z: Vec<T>,
    pub features: Option<Matrix<T>>,
}

impl<T> Sample<T> {
    pub fn data(z: Vec<T>) -> Self {
        Self { z, features: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossModel<T> {
    /// `ℓ_i = -c·z_iᵀx_i + (λ/2)‖x_i‖²` (requires `m_i = d_i`).
    Revenue { lambda: T, scale: T },
    /// `ℓ_i = ½‖z_i - Θᵀx_i‖²` with `z_i = Θᵀ b_i + ζ_i + Ā_i x`, i.e. the
    /// offset map is `φ_i(Θ) = Θᵀ b_i`.
    StrategicPrediction { features: FeatureModel<T>, truth: Vec<T> },
    /// `ℓ_i = ½ vᵀ H v + kᵀ v` with `v = (x, z_i)` stacked, `H` symmetric of
    /// size `d + m_i`.
    QuadraticCustom { hessian: Matrix<T>, linear: Vec<T> },
}

impl<T: Scalar> LossModel<T> {
    pub fn revenue(lambda: T, scale: T) -> Self {
        LossModel::Revenue { lambda, scale }
    }

    pub fn validate(&self, dims: &GameDims, i: usize) -> Result<()> {
        let (d_i, m_i, d) = (dims.decision_dim(i), dims.data_dim(i), dims.total());
        match self {
            LossModel::Revenue { lambda, scale } => {
                if d_i != m_i {
                    return Err(structural(format!("player {i}: revenue loss needs data dim == decision dim")));
                }
                if !(*lambda >= T::zero()) {
                    return Err(structural(format!("player {i}: revenue regularization must be >= 0")));
                }
                if !scale.is_finite() {
                    return Err(structural(format!("player {i}: revenue scale must be finite")));
                }
            }
            LossModel::StrategicPrediction { features, truth } => {
                if features.mean.shape() != (d_i, m_i) {
                    return Err(structural(format!("player {i}: feature matrix must be {d_i}x{m_i}")));
                }
                if truth.len() != d_i {
                    return Err(structural(format!("player {i}: truth vector must have length {d_i}")));
                }
                if !(features.std >= T::zero()) {
                    return Err(structural(format!("player {i}: feature std must be >= 0")));
                }
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let k = d + m_i;
                if hessian.shape() != (k, k) || linear.len() != k {
                    return Err(structural(format!("player {i}: quadratic coefficients must have size {k}")));
                }
                let asym = hessian.sub(&hessian.transpose()).max_abs();
                if asym > T::epsilon() * T::lit(1e3) * hessian.max_abs().max(T::one()) {
                    return Err(structural(format!("player {i}: quadratic hessian must be symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Whether `ℓ_i` depends on `x` only through `x_i`.
    pub fn is_separable(&self, dims: &GameDims, i: usize) -> bool {
        match self {
            LossModel::Revenue { .. } | LossModel::StrategicPrediction { .. } => true,
            LossModel::QuadraticCustom { hessian, linear } => {
                let own = dims.block_range(i);
                let k = hessian.rows();
                (0..dims.total()).filter(|c| !own.contains(c)).all(|c| {
                    linear[c] == T::zero() && (0..k).all(|r| hessian[(r, c)] == T::zero())
                })
            }
        }
    }

    /// Lipschitz constant `β_i` of `z_i ↦ ∇_i ℓ_i(x, z_i)` (of its mean over
    /// the feature draw for strategic prediction).
    pub fn z_lipschitz(&self, dims: &GameDims, i: usize) -> T {
        match self {
            LossModel::Revenue { scale, .. } => scale.abs(),
            LossModel::StrategicPrediction { features, .. } => features.mean.op_norm(),
            LossModel::QuadraticCustom { hessian, .. } => {
                let d = dims.total();
                hessian.block(dims.block_range(i), d..hessian.cols()).op_norm()
            }
        }
    }

    /// Mean of `z_i` given the mean `ẑ = μ_i + Ā_i y` of its non-feature part.
    pub fn data_mean(&self, zhat: &[T]) -> Vec<T> {
        match self {
            LossModel::StrategicPrediction { features, truth } => {
                let mut out = zhat.to_vec();
                features.mean.tr_mul_vec_add(truth, &mut out);
                out
            }
            _ => zhat.to_vec(),
        }
    }

    /// Trace of the covariance of `z_i` at any fixed decision.
    pub fn data_cov_trace(&self, base: &BaseDistribution<T>) -> T {
        match self {
            LossModel::StrategicPrediction { features, truth } => {
                let m = T::lit(features.mean.cols() as f64);
                base.cov_trace() + m * features.std * features.std * linalg::norm_sq(truth)
            }
            _ => base.cov_trace(),
        }
    }

    /// Draws the loss-specific part of a sample and assembles `z_i` from the
    /// base draw `ζ_i` and shift `Ā_i x`.
    pub(crate) fn sample_with<R: Rng + ?Sized>(&self, base: &BaseDistribution<T>, shift: &[T], rng: &mut R) -> Sample<T> {
        match self {
            LossModel::StrategicPrediction { features, truth } => {
                let theta = features.sample(rng);
                let mut z = base.sample(rng);
                theta.tr_mul_vec_add(truth, &mut z);
                z.iter_mut().zip(shift).for_each(|(a, &s)| *a += s);
                Sample { z, features: Some(theta) }
            }
            _ => {
                let mut z = base.sample(rng);
                z.iter_mut().zip(shift).for_each(|(a, &s)| *a += s);
                Sample::data(z)
            }
        }
    }

    fn stacked(dims: &GameDims, x: &BlockVector<T>, z: &[T]) -> Vec<T> {
        let mut v = Vec::with_capacity(dims.total() + z.len());
        v.extend_from_slice(x.as_slice());
        v.extend_from_slice(z);
        v
    }

    fn quad_grad(hessian: &Matrix<T>, linear: &[T], v: &[T]) -> Vec<T> {
        let mut g = linear.to_vec();
        hessian.mul_vec_add(v, &mut g);
        g
    }

    /// Loss value `ℓ_i(x, z_i)`.
    pub fn value(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, s: &Sample<T>) -> T {
        let xi = x.block(i);
        match self {
            LossModel::Revenue { lambda, scale } => {
                -*scale * linalg::dot(&s.z, xi) + T::lit(0.5) * *lambda * linalg::norm_sq(xi)
            }
            LossModel::StrategicPrediction { features, .. } => {
                let theta = s.features.as_ref().unwrap_or(&features.mean);
                let r = linalg::sub(&s.z, &theta.tr_mul_vec(xi));
                T::lit(0.5) * linalg::norm_sq(&r)
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let v = Self::stacked(dims, x, &s.z);
                T::lit(0.5) * linalg::dot(&v, &hessian.mul_vec(&v)) + linalg::dot(linear, &v)
            }
        }
    }

    /// `∇_{x_i} ℓ_i(x, z_i)`
    pub fn grad_x(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, s: &Sample<T>) -> Vec<T> {
        let xi = x.block(i);
        match self {
            LossModel::Revenue { lambda, scale } => {
                xi.iter().zip(&s.z).map(|(&xv, &zv)| *lambda * xv - *scale * zv).collect()
            }
            LossModel::StrategicPrediction { features, .. } => {
                let theta = s.features.as_ref().unwrap_or(&features.mean);
                let r = linalg::sub(&s.z, &theta.tr_mul_vec(xi));
                theta.mul_vec(&r).into_iter().map(|v| -v).collect()
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let g = Self::quad_grad(hessian, linear, &Self::stacked(dims, x, &s.z));
                g[dims.block_range(i)].to_vec()
            }
        }
    }

    /// `∇_{z_i} ℓ_i(x, z_i)`
    pub fn grad_z(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, s: &Sample<T>) -> Vec<T> {
        let xi = x.block(i);
        match self {
            LossModel::Revenue { scale, .. } => xi.iter().map(|&v| -*scale * v).collect(),
            LossModel::StrategicPrediction { features, .. } => {
                let theta = s.features.as_ref().unwrap_or(&features.mean);
                linalg::sub(&s.z, &theta.tr_mul_vec(xi))
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let g = Self::quad_grad(hessian, linear, &Self::stacked(dims, x, &s.z));
                g[dims.total()..].to_vec()
            }
        }
    }

    /// `E ∇_x ℓ_i(x, z_i)` over all of `x` (explicit dependence only), where
    /// the non-feature part of `z_i` has mean `zhat`.
    pub fn expected_grad_x_full(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, zhat: &[T]) -> Vec<T> {
        match self {
            LossModel::QuadraticCustom { hessian, linear } => {
                let mut g = Self::quad_grad(hessian, linear, &Self::stacked(dims, x, zhat));
                g.truncate(dims.total());
                g
            }
            _ => {
                let mut g = vec![T::zero(); dims.total()];
                let block = self.expected_grad_x(dims, i, x, zhat);
                g[dims.block_range(i)].copy_from_slice(&block);
                g
            }
        }
    }

    /// `E ∇_{x_i} ℓ_i(x, z_i)`
    pub fn expected_grad_x(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, zhat: &[T]) -> Vec<T> {
        let xi = x.block(i);
        match self {
            LossModel::Revenue { lambda, scale } => {
                xi.iter().zip(zhat).map(|(&xv, &zv)| *lambda * xv - *scale * zv).collect()
            }
            LossModel::StrategicPrediction { features, truth } => {
                // -E[ΘΘᵀ](b - x_i) - Θ̄ ẑ
                let diff = linalg::sub(truth, xi);
                let mut g = features.second_moment().mul_vec(&diff);
                features.mean.mul_vec_add(zhat, &mut g);
                g.into_iter().map(|v| -v).collect()
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let g = Self::quad_grad(hessian, linear, &Self::stacked(dims, x, zhat));
                g[dims.block_range(i)].to_vec()
            }
        }
    }

    /// `E ∇_{z_i} ℓ_i(x, z_i)`
    pub fn expected_grad_z(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, zhat: &[T]) -> Vec<T> {
        let xi = x.block(i);
        match self {
            LossModel::Revenue { scale, .. } => xi.iter().map(|&v| -*scale * v).collect(),
            LossModel::StrategicPrediction { features, truth } => {
                let diff = linalg::sub(truth, xi);
                let mut g = zhat.to_vec();
                features.mean.tr_mul_vec_add(&diff, &mut g);
                g
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let g = Self::quad_grad(hessian, linear, &Self::stacked(dims, x, zhat));
                g[dims.total()..].to_vec()
            }
        }
    }

    /// `E ℓ_i(x, z_i)` where the non-feature part of `z_i` has mean `zhat`
    /// and covariance `Σ_i` from `base`.
    pub fn expected_value(&self, dims: &GameDims, i: usize, x: &BlockVector<T>, zhat: &[T], base: &BaseDistribution<T>) -> T {
        let xi = x.block(i);
        let half = T::lit(0.5);
        match self {
            LossModel::Revenue { lambda, scale } => -*scale * linalg::dot(zhat, xi) + half * *lambda * linalg::norm_sq(xi),
            LossModel::StrategicPrediction { features, truth } => {
                let diff = linalg::sub(truth, xi);
                let mut r = zhat.to_vec();
                features.mean.tr_mul_vec_add(&diff, &mut r);
                let m = T::lit(features.mean.cols() as f64);
                half * linalg::norm_sq(&r)
                    + half * base.cov_trace()
                    + half * m * features.std * features.std * linalg::norm_sq(&diff)
            }
            LossModel::QuadraticCustom { hessian, linear } => {
                let v = Self::stacked(dims, x, zhat);
                let d = dims.total();
                let k = hessian.rows();
                let hzz = hessian.block(d..k, d..k);
                half * linalg::dot(&v, &hessian.mul_vec(&v))
                    + linalg::dot(linear, &v)
                    + half * hzz.matmul(&base.covariance()).trace()
            }
        }
    }
}
