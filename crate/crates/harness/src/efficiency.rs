//! Social cost and price of anarchy at the three equilibria.

use perfgame_core::game::LossModel;
use perfgame_core::{solve_nash, solve_perf_stable, solve_social_opt, Game, GameError, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const DEFAULT_MC_SAMPLES: usize = 100_000;
pub const DEFAULT_MC_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEfficiency {
    pub point: Vec<f64>,
    /// Closed-form `S(x)`.
    pub social_cost: f64,
    /// Monte Carlo estimate of `S(x)` and its standard error.
    pub empirical_cost: f64,
    pub std_error: f64,
    pub losses: Vec<f64>,
    /// Expected revenues `E[z_i]ᵀx_i`; only for revenue games.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revenues: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub s_so: f64,
    pub s_ne: f64,
    pub s_ps: f64,
    /// `S(x^ne) / S(x^so)` from closed-form costs.
    pub poa_ne: f64,
    pub poa_ps: f64,
    /// Ratios of the Monte Carlo costs.
    pub empirical_poa_ne: f64,
    pub empirical_poa_ps: f64,
    pub samples: usize,
    pub seed: u64,
    pub social_opt: PointEfficiency,
    pub nash: PointEfficiency,
    pub perf_stable: PointEfficiency,
}

/// Mean and standard error of the sampled social cost at `x`.
pub fn empirical_social_cost(game: &Game, x: &Vector, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..samples {
        let draws = game.sample_all(x, &mut rng);
        let cost: f64 = draws.iter().enumerate().map(|(i, s)| game.loss_value(i, x, s)).sum();
        let delta = cost - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (cost - mean);
    }
    let var = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    (mean, (var / samples as f64).sqrt())
}

fn revenues(game: &Game, x: &Vector) -> Option<Vec<f64>> {
    if !game.losses().iter().all(|l| matches!(l, LossModel::Revenue { .. })) {
        return None;
    }
    let out = (0..game.players())
        .map(|i| game.data_mean(i, x).iter().zip(x.block(i)).map(|(z, p)| z * p).sum())
        .collect();
    Some(out)
}

fn evaluate(game: &Game, x: &Vector, samples: usize, seed: u64) -> PointEfficiency {
    let (empirical_cost, std_error) = empirical_social_cost(game, x, samples, seed);
    PointEfficiency {
        point: x.as_slice().to_vec(),
        social_cost: game.social_cost(x),
        empirical_cost,
        std_error,
        losses: game.expected_losses(x),
        revenues: revenues(game, x),
    }
}

/// Solves for all three equilibria and compares their social costs. The
/// Monte Carlo estimates at the three points share one random stream.
pub fn efficiency_report(game: &Game, samples: usize, seed: u64) -> Result<EfficiencyReport> {
    let so = solve_social_opt(game)?.point;
    let ne = solve_nash(game)?.point;
    let ps = solve_perf_stable(game)?.point;
    let social_opt = evaluate(game, &so, samples, seed);
    let nash = evaluate(game, &ne, samples, seed);
    let perf_stable = evaluate(game, &ps, samples, seed);
    let s_so = social_opt.social_cost;
    if s_so == 0.0 || !s_so.is_finite() {
        return Err(GameError::AssumptionViolation {
            assumption: "nonzero optimal social cost",
            detail: format!("S(x^so) = {s_so}; the price of anarchy is undefined"),
        }
        .into());
    }
    Ok(EfficiencyReport {
        s_so,
        s_ne: nash.social_cost,
        s_ps: perf_stable.social_cost,
        poa_ne: nash.social_cost / s_so,
        poa_ps: perf_stable.social_cost / s_so,
        empirical_poa_ne: nash.empirical_cost / social_opt.empirical_cost,
        empirical_poa_ps: perf_stable.empirical_cost / social_opt.empirical_cost,
        samples,
        seed,
        social_opt,
        nash,
        perf_stable,
    })
}
