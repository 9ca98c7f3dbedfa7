//! Synthetic two-platform ride-share market.
//!
//! Platforms set prices `x_i ∈ R^m` over `m` locations and observe demand
//! `z_i = ζ_i + A_i x_i + A_{-i} x_{-i}`. Own elasticities follow the rule of
//! thumb that a 50% price increase loses 75% of the demand,
//! `a_jj = -0.75 q_j / (0.5 p)`; cross elasticities are a fixed fraction of
//! the own ones with the opposite sign. Base demand is an empirical
//! distribution of synthetic draws `max(0, q_j + √q_j ξ)` with independent
//! locations.

use perfgame_core::game::{BaseDistribution, FeasibleSet, GameDims, LocationFamily, LossModel, PlayerFamily};
use perfgame_core::linalg::Matrix;
use perfgame_core::{compute_constants, Game, GameInstance, GameSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const PLATFORMS: usize = 2;
/// Weight of demand in the loss `-c z_iᵀx_i + (λ/2)‖x_i‖²`.
pub const REVENUE_SCALE: f64 = 0.5;

fn default_cross_ratio() -> f64 {
    0.5
}

fn default_draws() -> usize {
    200
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RideShareParams {
    pub locations: usize,
    /// Nominal price bin `p`.
    pub price: f64,
    /// Base demand `q_j` per location (a single value is broadcast).
    pub base_demand: Vec<f64>,
    pub seed: u64,
    /// `|cross| / |own|` elasticity ratio.
    #[serde(default = "default_cross_ratio")]
    pub cross_ratio: f64,
    /// Synthetic demand draws per platform.
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl RideShareParams {
    pub fn new(locations: usize, price: f64, base_demand: Vec<f64>, seed: u64) -> Self {
        Self {
            locations,
            price,
            base_demand,
            seed,
            cross_ratio: default_cross_ratio(),
            draws: default_draws(),
            lambda: default_lambda(),
        }
    }

    fn demand(&self) -> Result<Vec<f64>> {
        let m = self.locations;
        if m == 0 {
            return Err(HarnessError::Config("a market needs at least one location".into()));
        }
        let q = match self.base_demand.len() {
            1 => vec![self.base_demand[0]; m],
            n if n == m => self.base_demand.clone(),
            n => return Err(HarnessError::Config(format!("{n} base demands for {m} locations"))),
        };
        if !(self.price > 0.0 && self.price.is_finite()) {
            return Err(HarnessError::Config(format!("price must be positive, got {}", self.price)));
        }
        if q.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(HarnessError::Config("base demand must be positive".into()));
        }
        if !(self.cross_ratio >= 0.0) || !(self.lambda > 0.0) || self.draws == 0 {
            return Err(HarnessError::Config("need cross_ratio >= 0, lambda > 0 and draws >= 1".into()));
        }
        Ok(q)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RideShareInstance {
    pub params: RideShareParams,
    /// Diagonals of `A_i` and `A_{-i}` (shared by both platforms).
    pub own_elasticity: Vec<f64>,
    pub cross_elasticity: Vec<f64>,
    /// Game file for the generated instance.
    pub spec: GameSpec,
    #[serde(skip)]
    pub game: Game,
}

/// `a_jj = -0.75 q_j / (0.5 p)`
pub fn own_elasticity(q: f64, price: f64) -> f64 {
    -0.75 * q / (0.5 * price)
}

pub fn gen_rideshare(params: &RideShareParams) -> Result<RideShareInstance> {
    let q = params.demand()?;
    let m = params.locations;
    let own: Vec<f64> = q.iter().map(|&qj| own_elasticity(qj, params.price)).collect();
    let cross: Vec<f64> = own.iter().map(|a| params.cross_ratio * a.abs()).collect();

    let dims = GameDims::uniform(PLATFORMS, m, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let fams = (0..PLATFORMS)
        .map(|i| {
            let samples = (0..params.draws)
                .map(|_| {
                    q.iter().map(|&qj| (qj + qj.sqrt() * rng.sample::<f64, _>(StandardNormal)).max(0.0)).collect()
                })
                .collect();
            let base = BaseDistribution::empirical(samples)?;
            PlayerFamily::new(&dims, i, base, Matrix::from_diagonal(&own), Matrix::from_diagonal(&cross))
        })
        .collect::<perfgame_core::Result<Vec<_>>>()?;
    let family = LocationFamily::new(&dims, fams)?;
    let losses = vec![LossModel::revenue(params.lambda, REVENUE_SCALE); PLATFORMS];
    let game = GameInstance::new(dims.clone(), FeasibleSet::whole_space(&dims), family, losses, true)?;
    compute_constants(&game)?;
    Ok(RideShareInstance {
        params: params.clone(),
        own_elasticity: own,
        cross_elasticity: cross,
        spec: GameSpec::from_game(&game),
        game,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elasticity_rule() {
        let inst = gen_rideshare(&RideShareParams::new(1, 10.0, vec![100.0], 1)).unwrap();
        assert_eq!(inst.own_elasticity, vec![-15.0]);
        assert_eq!(inst.cross_elasticity, vec![7.5]);
        assert_eq!(inst.game.players(), 2);
        let own = inst.game.family().player(0).own();
        assert_eq!(own[(0, 0)], -15.0);
        assert_eq!(inst.game.family().player(1).cross()[(0, 0)], 7.5);
    }

    #[test]
    fn cross_ratio_is_a_knob() {
        let mut p = RideShareParams::new(3, 10.0, vec![40.0, 80.0, 120.0], 2);
        p.cross_ratio = 0.25;
        let inst = gen_rideshare(&p).unwrap();
        assert_eq!(inst.own_elasticity, vec![-6.0, -12.0, -18.0]);
        assert_eq!(inst.cross_elasticity, vec![1.5, 3.0, 4.5]);
    }

    #[test]
    fn synthetic_demand_centres_on_q() {
        let mut p = RideShareParams::new(2, 5.0, vec![50.0, 200.0], 3);
        p.draws = 4000;
        let inst = gen_rideshare(&p).unwrap();
        for i in 0..2 {
            let mean = inst.game.family().player(i).base().mean().to_vec();
            assert!((mean[0] - 50.0).abs() < 4.0 * (50.0f64 / 4000.0).sqrt());
            assert!((mean[1] - 200.0).abs() < 4.0 * (200.0f64 / 4000.0).sqrt());
        }
    }

    #[test]
    fn invalid_markets() {
        assert!(gen_rideshare(&RideShareParams::new(0, 10.0, vec![1.0], 0)).is_err());
        assert!(gen_rideshare(&RideShareParams::new(2, 0.0, vec![1.0], 0)).is_err());
        assert!(gen_rideshare(&RideShareParams::new(2, 1.0, vec![1.0, -1.0], 0)).is_err());
        assert!(gen_rideshare(&RideShareParams::new(2, 1.0, vec![1.0, 1.0, 1.0], 0)).is_err());
    }
}
