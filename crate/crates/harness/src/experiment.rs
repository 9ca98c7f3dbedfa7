//! Multi-seed experiments.

use std::collections::BTreeMap;

use log::{info, warn};
use perfgame_core::oracles::solve;
use perfgame_core::{compute_constants, run_solver, EquilibriumKind, Game, GameSpec, Trajectory, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Metric};
use crate::efficiency::{efficiency_report, EfficiencyReport, DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub solver: String,
    pub seed: u64,
    pub reference: EquilibriumKind,
    pub iterations: usize,
    pub final_error_sq: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub game: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunSummary>,
    pub diverged_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencyReport>,
}

/// Mean and population standard deviation of `error_sq` over the runs of one
/// solver that recorded iteration `iter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub solver: String,
    pub iter: usize,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Sorted by `(solver, seed)`.
    pub trajectories: Vec<Trajectory>,
    pub aggregate: Vec<AggregatePoint>,
    pub report: ExperimentReport,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Deterministic reduce: runs are ordered by `(solver, seed)` before any
/// arithmetic, so the result does not depend on the input order.
pub fn aggregate(trajectories: &[Trajectory]) -> Vec<AggregatePoint> {
    let mut by_solver: BTreeMap<&str, Vec<&Trajectory>> = BTreeMap::new();
    for t in trajectories {
        by_solver.entry(t.solver.as_str()).or_default().push(t);
    }
    let mut out = Vec::new();
    for (solver, mut runs) in by_solver {
        runs.sort_by_key(|t| t.seed);
        let mut by_iter: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for t in runs {
            for r in &t.records {
                by_iter.entry(r.iter).or_default().push(r.error_sq);
            }
        }
        for (iter, values) in by_iter {
            let (mean, std) = mean_std(&values);
            out.push(AggregatePoint { solver: solver.to_string(), iter, mean, std, runs: values.len() });
        }
    }
    out
}

/// Loads the game named in the config and runs the experiment on it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let game = GameSpec::load(&cfg.game)?.build::<f64>()?;
    run_experiment_on(&game, cfg)
}

pub fn run_experiment_on(game: &Game, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let constants = compute_constants(game)?;

    let mut references: BTreeMap<&'static str, (EquilibriumKind, Vector)> = BTreeMap::new();
    for s in &cfg.solvers {
        let kind = cfg.reference.resolve(s.algorithm);
        let key = kind_name(kind);
        if !references.contains_key(key) {
            let point = solve(game, kind)?.point;
            references.insert(key, (kind, point));
        }
    }

    let jobs: Vec<(usize, u64)> =
        (0..cfg.solvers.len()).flat_map(|k| cfg.seeds.iter().map(move |&seed| (k, seed))).collect();
    info!("running {} jobs", jobs.len());
    let results: Vec<Result<(EquilibriumKind, Trajectory)>> = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let mut solver = cfg.solvers[k].clone();
            solver.seed = seed;
            let (kind, point) = &references[kind_name(cfg.reference.resolve(solver.algorithm))];
            let traj = run_solver(game, &constants, &solver, Some(point))?;
            Ok((*kind, traj))
        })
        .collect();
    let mut runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    runs.sort_by(|a, b| (&a.1.solver, a.1.seed).cmp(&(&b.1.solver, b.1.seed)));

    let summaries: Vec<RunSummary> = runs
        .iter()
        .map(|(kind, t)| {
            if t.diverged {
                warn!("{} seed {} diverged after {} iterations", t.solver, t.seed, t.iterations);
            }
            RunSummary {
                solver: t.solver.clone(),
                seed: t.seed,
                reference: *kind,
                iterations: t.iterations,
                final_error_sq: t.final_error_sq(),
                diverged: t.diverged,
            }
        })
        .collect();
    let trajectories: Vec<Trajectory> = runs.into_iter().map(|(_, t)| t).collect();
    let efficiency = if cfg.wants(Metric::Efficiency) {
        Some(efficiency_report(game, DEFAULT_MC_SAMPLES, DEFAULT_MC_SEED)?)
    } else {
        None
    };
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    let report = ExperimentReport {
        game: cfg.game.display().to_string(),
        seeds,
        diverged_runs: summaries.iter().filter(|s| s.diverged).count(),
        runs: summaries,
        efficiency,
    };
    Ok(ExperimentOutput { aggregate: aggregate(&trajectories), trajectories, report })
}

fn kind_name(kind: EquilibriumKind) -> &'static str {
    match kind {
        EquilibriumKind::Nash => "nash",
        EquilibriumKind::PerfStable => "perf_stable",
        EquilibriumKind::SocialOpt => "social_opt",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_statistics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
