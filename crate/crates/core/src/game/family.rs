//! Location families: `z_i = ζ_i + A_i x_i + A_{-i} x_{-i}` with `ζ_i ~ P_i`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{structural, Result};
use crate::game::dims::{BlockVector, GameDims};
use crate::linalg::{psd_factor, Matrix};
use crate::scalar::Scalar;

/// Base distribution `P_i` of the unperturbed data.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseDistribution<T> {
    Deterministic { mean: Vec<T> },
    Gaussian { mean: Vec<T>, cov: Matrix<T>, factor: Matrix<T> },
    /// Uniform over the rows of a sample matrix.
    Empirical { samples: Vec<Vec<T>>, mean: Vec<T>, cov: Matrix<T> },
}

impl<T: Scalar> BaseDistribution<T> {
    pub fn deterministic(mean: Vec<T>) -> Self {
        BaseDistribution::Deterministic { mean }
    }

    pub fn gaussian(mean: Vec<T>, cov: Matrix<T>) -> Result<Self> {
        if cov.shape() != (mean.len(), mean.len()) {
            return Err(structural("gaussian covariance shape does not match its mean"));
        }
        if cov.sub(&cov.transpose()).max_abs() > T::epsilon() * T::lit(1e3) * cov.max_abs().max(T::one()) {
            return Err(structural("gaussian covariance must be symmetric"));
        }
        let factor = psd_factor(&cov)?;
        Ok(BaseDistribution::Gaussian { mean, cov, factor })
    }

    /// Isotropic Gaussian `N(mean, s² I)`.
    pub fn isotropic(mean: Vec<T>, std: T) -> Self {
        let m = mean.len();
        let cov = Matrix::from_diagonal(&vec![std * std; m]);
        let factor = Matrix::from_diagonal(&vec![std; m]);
        BaseDistribution::Gaussian { mean, cov, factor }
    }

    pub fn empirical(samples: Vec<Vec<T>>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return Err(structural("empirical distribution needs at least one sample"));
        };
        let m = first.len();
        if m == 0 || samples.iter().any(|s| s.len() != m) {
            return Err(structural("empirical samples must share one positive dimension"));
        }
        let count = T::lit(samples.len() as f64);
        let mut mean = vec![T::zero(); m];
        for s in &samples {
            for (a, &v) in mean.iter_mut().zip(s) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= count);
        let mut cov = Matrix::zeros(m, m);
        for s in &samples {
            let c: Vec<T> = s.iter().zip(&mean).map(|(&v, &mu)| v - mu).collect();
            cov.rank_one_update(T::one() / count, &c, &c);
        }
        Ok(BaseDistribution::Empirical { samples, mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean().len()
    }

    pub fn mean(&self) -> &[T] {
        match self {
            BaseDistribution::Deterministic { mean }
            | BaseDistribution::Gaussian { mean, .. }
            | BaseDistribution::Empirical { mean, .. } => mean,
        }
    }

    /// Covariance `Σ_i` (population covariance for empirical bases).
    pub fn covariance(&self) -> Matrix<T> {
        match self {
            BaseDistribution::Deterministic { mean } => Matrix::zeros(mean.len(), mean.len()),
            BaseDistribution::Gaussian { cov, .. } | BaseDistribution::Empirical { cov, .. } => cov.clone(),
        }
    }

    pub fn cov_trace(&self) -> T {
        match self {
            BaseDistribution::Deterministic { .. } => T::zero(),
            BaseDistribution::Gaussian { cov, .. } | BaseDistribution::Empirical { cov, .. } => cov.trace(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            BaseDistribution::Deterministic { .. } => true,
            BaseDistribution::Gaussian { factor, .. } => factor.is_zero(),
            BaseDistribution::Empirical { cov, .. } => cov.is_zero(),
        }
    }

    /// Draws `ζ ~ P`. Deterministic bases consume no randomness.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<T> {
        match self {
            BaseDistribution::Deterministic { mean } => mean.clone(),
            BaseDistribution::Gaussian { mean, factor, .. } => {
                let xi: Vec<T> = (0..mean.len()).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
                let mut out = mean.clone();
                factor.mul_vec_add(&xi, &mut out);
                out
            }
            BaseDistribution::Empirical { samples, .. } => samples[rng.random_range(0..samples.len())].clone(),
        }
    }
}

/// Distribution map of one player: base distribution plus performative shift.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerFamily<T> {
    base: BaseDistribution<T>,
    own: Matrix<T>,
    cross: Matrix<T>,
    stacked: Matrix<T>,
}

impl<T: Scalar> PlayerFamily<T> {
    /// `own` is `m_i × d_i`, `cross` is `m_i × (d - d_i)`.
    pub fn new(dims: &GameDims, player: usize, base: BaseDistribution<T>, own: Matrix<T>, cross: Matrix<T>) -> Result<Self> {
        let m = dims.data_dim(player);
        if base.dim() != m {
            return Err(structural(format!("player {player}: base distribution has dimension {}, expected {m}", base.dim())));
        }
        if own.shape() != (m, dims.decision_dim(player)) {
            return Err(structural(format!(
                "player {player}: own-effect matrix is {:?}, expected ({m}, {})",
                own.shape(),
                dims.decision_dim(player)
            )));
        }
        if cross.shape() != (m, dims.others_dim(player)) {
            return Err(structural(format!(
                "player {player}: competitor-effect matrix is {:?}, expected ({m}, {})",
                cross.shape(),
                dims.others_dim(player)
            )));
        }
        let range = dims.block_range(player);
        let stacked = Matrix::from_fn(m, dims.total(), |r, c| {
            if range.contains(&c) {
                own[(r, c - range.start)]
            } else if c < range.start {
                cross[(r, c)]
            } else {
                cross[(r, c - range.len())]
            }
        });
        Ok(Self { base, own, cross, stacked })
    }

    pub fn base(&self) -> &BaseDistribution<T> {
        &self.base
    }

    /// `A_i`
    pub fn own(&self) -> &Matrix<T> {
        &self.own
    }

    /// `A_{-i}`
    pub fn cross(&self) -> &Matrix<T> {
        &self.cross
    }

    /// `Ā_i` with `Ā_i x = A_i x_i + A_{-i} x_{-i}`.
    pub fn stacked(&self) -> &Matrix<T> {
        &self.stacked
    }

    /// Performative shift `Ā_i x`.
    pub fn shift(&self, x: &BlockVector<T>) -> Vec<T> {
        self.stacked.mul_vec(x.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationFamily<T> {
    players: Vec<PlayerFamily<T>>,
}

impl<T: Scalar> LocationFamily<T> {
    pub fn new(dims: &GameDims, players: Vec<PlayerFamily<T>>) -> Result<Self> {
        if players.len() != dims.players() {
            return Err(structural(format!("{} distribution maps for {} players", players.len(), dims.players())));
        }
        Ok(Self { players })
    }

    pub fn player(&self, i: usize) -> &PlayerFamily<T> {
        &self.players[i]
    }

    pub fn players(&self) -> &[PlayerFamily<T>] {
        &self.players
    }

    /// True when every `A_i` and `A_{-i}` vanishes.
    pub fn is_static(&self) -> bool {
        self.players.iter().all(|p| p.stacked.is_zero())
    }
}
