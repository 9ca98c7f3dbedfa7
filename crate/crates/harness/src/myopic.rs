//! Players that ignore part of the performative effect.
//!
//! Every player runs projected stochastic gradient steps on a revenue loss
//! `-c z_iᵀx_i + (λ/2)‖x_i‖²` with its own gradient estimate:
//!
//! - `Myopic`: `g_i = λx_i - c ζ_i`
//! - `PartiallyMyopic`: `g_i = λx_i - c(A_i + A_iᵀ)x_i - c ζ_i`
//! - `Full`: `g_i = λx_i - c(A_i + A_iᵀ)x_i - c(ζ_i + A_{-i}x_{-i})`
//!
//! For `c = ½` and diagonal `A_i` these are `-(A_i - λI)ᵀx_i - ½(…)`. The
//! market itself always applies the full shift; outcomes are compared with
//! the all-`Full` run on the same seeds.

use perfgame_core::game::LossModel;
use perfgame_core::linalg::Matrix;
use perfgame_core::{Game, GameError, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayerMode {
    Myopic,
    PartiallyMyopic,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyopicConfig {
    pub modes: Vec<PlayerMode>,
    pub eta: f64,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    /// Starting prices; zero when absent.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
}

/// Gradient estimate of one player from a base draw `ζ_i`.
#[allow(clippy::too_many_arguments)]
pub fn mode_gradient(
    mode: PlayerMode,
    own: &Matrix<f64>,
    cross: &Matrix<f64>,
    lambda: f64,
    scale: f64,
    x_i: &[f64],
    x_others: &[f64],
    zeta: &[f64],
) -> Vec<f64> {
    let mut g: Vec<f64> = x_i.iter().zip(zeta).map(|(x, z)| lambda * x - scale * z).collect();
    if mode == PlayerMode::Myopic {
        return g;
    }
    let ax = own.mul_vec(x_i);
    let atx = own.transpose().mul_vec(x_i);
    for (k, v) in g.iter_mut().enumerate() {
        *v -= scale * (ax[k] + atx[k]);
    }
    if mode == PlayerMode::Full && !x_others.is_empty() {
        for (v, c) in g.iter_mut().zip(cross.mul_vec(x_others)) {
            *v -= scale * c;
        }
    }
    g
}

/// Prices, expected demand and revenue per player and location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub price: Vec<Vec<f64>>,
    pub demand: Vec<Vec<f64>>,
    pub revenue: Vec<Vec<f64>>,
    pub total_demand: Vec<f64>,
    pub total_revenue: Vec<f64>,
}

impl MarketOutcome {
    fn at(game: &Game, x: &Vector) -> Self {
        let n = game.players();
        let price: Vec<Vec<f64>> = (0..n).map(|i| x.block(i).to_vec()).collect();
        let demand: Vec<Vec<f64>> = (0..n).map(|i| game.data_mean(i, x)).collect();
        let revenue: Vec<Vec<f64>> =
            price.iter().zip(&demand).map(|(p, d)| p.iter().zip(d).map(|(a, b)| a * b).collect()).collect();
        Self::with_totals(price, demand, revenue)
    }

    fn with_totals(price: Vec<Vec<f64>>, demand: Vec<Vec<f64>>, revenue: Vec<Vec<f64>>) -> Self {
        let total_demand = demand.iter().map(|d| d.iter().sum()).collect();
        let total_revenue = revenue.iter().map(|r| r.iter().sum()).collect();
        Self { price, demand, revenue, total_demand, total_revenue }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let z = |a: &[Vec<f64>], b: &[Vec<f64>]| -> Vec<Vec<f64>> {
            a.iter().zip(b).map(|(u, v)| u.iter().zip(v).map(|(p, q)| f(*p, *q)).collect()).collect()
        };
        Self::with_totals(z(&self.price, &other.price), z(&self.demand, &other.demand), z(&self.revenue, &other.revenue))
    }

    /// Seed average; `outcomes` must be non-empty.
    fn mean(outcomes: &[Self]) -> Self {
        let k = outcomes.len() as f64;
        let sum = outcomes[1..].iter().fold(outcomes[0].clone(), |acc, o| acc.zip(o, |a, b| a + b));
        sum.zip(&sum, |a, _| a / k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MyopicReport {
    pub modes: Vec<PlayerMode>,
    pub outcome: MarketOutcome,
    pub baseline: MarketOutcome,
    /// `outcome - baseline`
    pub delta: MarketOutcome,
}

fn revenue_params(game: &Game) -> Result<Vec<(f64, f64)>> {
    game.losses()
        .iter()
        .map(|l| match l {
            LossModel::Revenue { lambda, scale } => Ok((*lambda, *scale)),
            _ => Err(GameError::Capability("myopic studies need revenue losses".into()).into()),
        })
        .collect()
}

fn run_modes(game: &Game, cfg: &MyopicConfig, modes: &[PlayerMode], params: &[(f64, f64)]) -> Result<MarketOutcome> {
    let x0 = match &cfg.x0 {
        Some(v) => game.vector(v.clone())?,
        None => game.zeros(),
    };
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    let outcomes: Vec<MarketOutcome> = seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x = x0.clone();
            game.feasible().project_in_place(&mut x, 0.0);
            for _ in 0..cfg.iterations {
                let mut next = x.clone();
                for (i, &mode) in modes.iter().enumerate() {
                    let fam = game.family().player(i);
                    let zeta = fam.base().sample(&mut rng);
                    let (lambda, scale) = params[i];
                    let g = mode_gradient(mode, fam.own(), fam.cross(), lambda, scale, x.block(i), &x.others(i), &zeta);
                    for (v, gk) in next.block_mut(i).iter_mut().zip(g) {
                        *v -= cfg.eta * gk;
                    }
                }
                game.feasible().project_in_place(&mut next, 0.0);
                x = next;
            }
            MarketOutcome::at(game, &x)
        })
        .collect();
    Ok(MarketOutcome::mean(&outcomes))
}

pub fn myopic_study(game: &Game, cfg: &MyopicConfig) -> Result<MyopicReport> {
    if cfg.modes.len() != game.players() {
        return Err(GameError::Config(format!("{} modes for {} players", cfg.modes.len(), game.players())).into());
    }
    if cfg.seeds.is_empty() || !(cfg.eta > 0.0) {
        return Err(GameError::Config("myopic study needs seeds and a positive step".into()).into());
    }
    let params = revenue_params(game)?;
    let outcome = run_modes(game, cfg, &cfg.modes, &params)?;
    let full = vec![PlayerMode::Full; game.players()];
    let baseline = run_modes(game, cfg, &full, &params)?;
    let delta = outcome.zip(&baseline, |a, b| a - b);
    Ok(MyopicReport { modes: cfg.modes.clone(), outcome, baseline, delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use perfgame_core::catalog;

    #[test]
    fn gradient_examples() {
        let own = Matrix::from_diagonal(&[-2.0]);
        let cross = Matrix::from_diagonal(&[0.5]);
        let g = mode_gradient(PlayerMode::Myopic, &own, &cross, 1.0, 0.5, &[1.0], &[1.0], &[0.0]);
        assert_eq!(g, vec![1.0]);
        let g = mode_gradient(PlayerMode::PartiallyMyopic, &own, &cross, 1.0, 0.5, &[1.0], &[1.0], &[0.0]);
        assert_eq!(g, vec![3.0]);
        let g = mode_gradient(PlayerMode::Full, &own, &cross, 1.0, 0.5, &[1.0], &[1.0], &[0.0]);
        assert_eq!(g, vec![2.75]);
    }

    #[test]
    fn full_mode_matches_the_performative_gradient() {
        let game = catalog::scalar_duopoly::<f64>();
        let x = game.vector(vec![0.3, -0.2]).unwrap();
        let d = game.performative_grad_map(&x);
        for i in 0..2 {
            let fam = game.family().player(i);
            let zeta = fam.base().mean().to_vec();
            let g = mode_gradient(PlayerMode::Full, fam.own(), fam.cross(), 2.0, 1.0, x.block(i), &x.others(i), &zeta);
            assert!((g[0] - d.block(i)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn all_full_has_zero_deltas() {
        let game = catalog::scalar_duopoly::<f64>();
        let cfg = MyopicConfig { modes: vec![PlayerMode::Full; 2], eta: 0.05, iterations: 500, seeds: vec![2, 1], x0: None };
        let r = myopic_study(&game, &cfg).unwrap();
        assert!(r.delta.price.iter().flatten().all(|v| *v == 0.0));
        assert!(r.delta.total_revenue.iter().all(|v| *v == 0.0));
        // Full players settle near the Nash point.
        assert!(r.outcome.price.iter().all(|p| (p[0] - 2.0 / 7.0).abs() < 0.02));
    }

    #[test]
    fn myopic_players_reach_the_naive_fixed_point() {
        // Myopic: λx = cζ̄ in expectation, i.e. x = 0.5 on the duopoly.
        let game = catalog::scalar_duopoly::<f64>();
        let cfg = MyopicConfig {
            modes: vec![PlayerMode::Myopic, PlayerMode::Full],
            eta: 0.05,
            iterations: 2000,
            seeds: vec![1, 2, 3],
            x0: None,
        };
        let r = myopic_study(&game, &cfg).unwrap();
        assert!((r.outcome.price[0][0] - 0.5).abs() < 0.02);
        assert!(r.delta.price[0][0] > 0.1);
    }

    #[test]
    fn needs_revenue_losses() {
        let game = catalog::quadratic_single::<f64>();
        let cfg = MyopicConfig { modes: vec![PlayerMode::Full], eta: 0.1, iterations: 1, seeds: vec![0], x0: None };
        assert!(matches!(myopic_study(&game, &cfg), Err(crate::HarnessError::Game(GameError::Capability(_)))));
    }
}
