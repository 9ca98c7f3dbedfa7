//! Solver configuration and the driver that turns a configuration into a
//! [`Trajectory`].
//!
//! ```json
//! {"algorithm": "rsgm", "step_size": 0.01, "iterations": 20000, "seed": 7}
//! {"algorithm": "sgm", "schedule": {"type": "step_decay", "target_eps": 0.01, "radius_sq": 1.0}}
//! {"algorithm": "dfo", "dfo": {"radius": 0.1, "eta0": 0.5}, "iterations": 10000}
//! {"algorithm": "agm", "agm": {"noise_kind": "rademacher_product"}, "iterations": 10000}
//! ```

use std::fmt;
use std::str::FromStr;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::game::constants::GameConstants;
use crate::game::dims::BlockVector;
use crate::game::instance::GameInstance;
use crate::scalar::{convert_vec, Scalar};
use crate::solvers::adaptive::{agm_step, AdaptiveState, NoiseKind, NoiseModel};
use crate::solvers::schedule::{harmonic, StepDecaySchedule};
use crate::solvers::steps::{dfo_step, repeated_gradient_step, rsgm_step, sgm_nash_step, DerivativeFreeConfig, Retrainer};
use crate::solvers::trajectory::{default_record_every, Recorder, Trajectory};

/// Step size used by stochastic methods when none is configured.
pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_DFO_RADIUS: f64 = 5.0;
pub const DEFAULT_DFO_ETA0: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Repeated retraining (exact static best responses).
    Retrain,
    /// Repeated gradient method.
    Rgm,
    /// Repeated stochastic gradient method.
    Rsgm,
    /// Derivative-free method.
    Dfo,
    /// Stochastic gradient method on the full gradient.
    Sgm,
    /// Adaptive gradient method.
    Agm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Retrain, Algorithm::Rgm, Algorithm::Rsgm, Algorithm::Dfo, Algorithm::Sgm, Algorithm::Agm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Retrain => "retrain",
            Algorithm::Rgm => "rgm",
            Algorithm::Rsgm => "rsgm",
            Algorithm::Dfo => "dfo",
            Algorithm::Sgm => "sgm",
            Algorithm::Agm => "agm",
        }
    }

    /// Whether the method targets the Nash equilibrium (otherwise the
    /// performatively stable point).
    pub fn targets_nash(self) -> bool {
        matches!(self, Algorithm::Dfo | Algorithm::Sgm | Algorithm::Agm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| GameError::Config(format!("unknown algorithm '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Constant { eta: f64 },
    /// `η_t = eta0 / t`
    Harmonic { eta0: f64 },
    /// Step-decay schedule built from the game constants; replaces
    /// `iterations` by the schedule length.
    StepDecay {
        target_eps: f64,
        radius_sq: f64,
        #[serde(default)]
        sigma: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DfoConfig {
    pub radius: f64,
    pub eta0: f64,
}

impl Default for DfoConfig {
    fn default() -> Self {
        Self { radius: DEFAULT_DFO_RADIUS, eta0: DEFAULT_DFO_ETA0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgmConfig {
    pub noise_kind: NoiseKind,
}

impl Default for AgmConfig {
    fn default() -> Self {
        Self { noise_kind: NoiseKind::GaussianIsotropic }
    }
}

fn default_iterations() -> usize {
    1000
}

fn default_inner_tol() -> f64 {
    1e-10
}

fn default_init_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Label used in outputs; defaults to the algorithm name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Constant step size (shorthand for a constant schedule).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dfo: Option<DfoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agm: Option<AgmConfig>,
    #[serde(default)]
    pub strict_mode: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    /// Fixed starting point; otherwise `x⁰ ~ N(0, init_scale² I)` projected
    /// onto the feasible set, drawn from the run's random stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            name: None,
            step_size: None,
            schedule: None,
            iterations: default_iterations(),
            seed: 0,
            inner_tol: default_inner_tol(),
            dfo: None,
            agm: None,
            strict_mode: false,
            record_every: None,
            x0: None,
            init_scale: default_init_scale(),
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.algorithm.name().to_string())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GameError::Config(format!("solver config: {e}")))
    }
}

/// Step size at iteration `t ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule<T> {
    Constant(T),
    Harmonic(T),
    Decay(StepDecaySchedule<T>),
}

impl<T: Scalar> StepRule<T> {
    pub fn at(&self, t: usize) -> T {
        match self {
            StepRule::Constant(eta) => *eta,
            StepRule::Harmonic(eta0) => harmonic(*eta0, t),
            StepRule::Decay(s) => s.step_at(t - 1),
        }
    }

    /// Largest step the rule ever takes.
    pub fn max_step(&self) -> T {
        match self {
            StepRule::Constant(eta) | StepRule::Harmonic(eta) => *eta,
            StepRule::Decay(s) => s.eta0,
        }
    }

    pub fn iterations(&self, configured: usize) -> usize {
        match self {
            StepRule::Decay(s) => s.total_iterations(),
            _ => configured,
        }
    }
}

fn positive(v: f64, what: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(GameError::Config(format!("{what} must be positive, got {v}")))
    }
}

fn step_rule<T: Scalar>(cfg: &SolverConfig, constants: &GameConstants<T>, fallback: StepRule<T>) -> Result<StepRule<T>> {
    if cfg.step_size.is_some() && cfg.schedule.is_some() {
        return Err(GameError::Config("give either step_size or schedule, not both".into()));
    }
    if let Some(eta) = cfg.step_size {
        return Ok(StepRule::Constant(T::lit(positive(eta, "step_size")?)));
    }
    match &cfg.schedule {
        None => Ok(fallback),
        Some(ScheduleConfig::Constant { eta }) => Ok(StepRule::Constant(T::lit(positive(*eta, "eta")?))),
        Some(ScheduleConfig::Harmonic { eta0 }) => Ok(StepRule::Harmonic(T::lit(positive(*eta0, "eta0")?))),
        Some(ScheduleConfig::StepDecay { target_eps, radius_sq, sigma }) => {
            let (eps, rsq) = (T::lit(*target_eps), T::lit(*radius_sq));
            let schedule = match cfg.algorithm {
                Algorithm::Rsgm => {
                    let sigma = sigma.map(T::lit).or(constants.sigma).ok_or_else(|| {
                        GameError::Config("step-decay schedule needs sigma: the gradient variance is not bounded".into())
                    })?;
                    StepDecaySchedule::rsgm(constants.alpha, constants.rho, constants.lipschitz, rsq, eps, sigma)?
                }
                Algorithm::Sgm => {
                    let sigma = sigma.map(T::lit).or(constants.sigma_nash).ok_or_else(|| {
                        GameError::Config("step-decay schedule needs sigma: the gradient variance is not bounded".into())
                    })?;
                    StepDecaySchedule::sgm_nash(constants.alpha_perf, constants.lipschitz_perf, rsq, eps, sigma)?
                }
                other => return Err(GameError::Config(format!("step-decay schedules apply to rsgm and sgm, not {other}"))),
            };
            Ok(StepRule::Decay(schedule))
        }
    }
}

fn strict_bound<T: Scalar>(value: T, bound: T, inclusive: bool, rule: &'static str) -> Result<()> {
    let ok = if inclusive { value <= bound } else { value < bound };
    if ok {
        Ok(())
    } else {
        Err(GameError::StepSize { value: value.as_f64(), bound: bound.as_f64(), rule })
    }
}

fn initial_point<T: Scalar, R: Rng + ?Sized>(game: &GameInstance<T>, cfg: &SolverConfig, shrink: T, rng: &mut R) -> Result<BlockVector<T>> {
    let mut x = match &cfg.x0 {
        Some(v) => game.vector(convert_vec(v))?,
        None => {
            let d = game.dims().total();
            let raw: Vec<f64> = (0..d).map(|_| cfg.init_scale * rng.sample::<f64, _>(StandardNormal)).collect();
            game.vector(convert_vec(&raw))?
        }
    };
    game.feasible().project_in_place(&mut x, shrink);
    Ok(x)
}

/// Runs the configured solver from a seeded stream. `reference` is the point
/// errors are measured against.
pub fn run_solver<T: Scalar>(
    game: &GameInstance<T>,
    constants: &GameConstants<T>,
    cfg: &SolverConfig,
    reference: Option<&BlockVector<T>>,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let snapshot = serde_json::to_value(cfg).expect("solver config serializes");
    let (alpha, rho, l) = (constants.alpha, constants.rho, constants.lipschitz);
    let (alpha_d, l_d) = (constants.alpha_perf, constants.lipschitz_perf);
    let two = T::lit(2.0);

    match cfg.algorithm {
        Algorithm::Retrain => {
            let retrainer = Retrainer::new(game, constants, cfg.strict_mode)?;
            let inner = T::achievable(cfg.inner_tol);
            let x0 = initial_point(game, cfg, T::zero(), &mut rng)?;
            drive(game, cfg, snapshot, reference, x0, cfg.iterations, |x, _| retrainer.step(game, x, inner))
        }
        Algorithm::Rgm => {
            let rule = step_rule(cfg, constants, StepRule::Constant(alpha / (l * l)))?;
            let x0 = initial_point(game, cfg, T::zero(), &mut rng)?;
            let n = rule.iterations(cfg.iterations);
            drive(game, cfg, snapshot, reference, x0, n, |x, t| Ok(repeated_gradient_step(game, x, rule.at(t))))
        }
        Algorithm::Rsgm => {
            let rule = step_rule(cfg, constants, StepRule::Constant(T::lit(DEFAULT_STEP)))?;
            if cfg.strict_mode {
                let bound = alpha * (T::one() - rho) / (T::lit(8.0) * l * l);
                strict_bound(rule.max_step(), bound, false, "rsgm requires eta < alpha(1-rho)/(8L^2)")?;
            }
            let x0 = initial_point(game, cfg, T::zero(), &mut rng)?;
            let n = rule.iterations(cfg.iterations);
            drive(game, cfg, snapshot, reference, x0, n, |x, t| Ok(rsgm_step(game, x, rule.at(t), &mut rng)))
        }
        Algorithm::Sgm => {
            let rule = step_rule(cfg, constants, StepRule::Constant(T::lit(DEFAULT_STEP)))?;
            if cfg.strict_mode {
                if !(alpha_d > T::zero()) {
                    return Err(GameError::AssumptionViolation {
                        assumption: "game strongly monotone",
                        detail: format!("modulus of D is {alpha_d}"),
                    });
                }
                strict_bound(rule.max_step(), alpha_d / (two * l_d * l_d), true, "sgm requires eta <= alpha/(2L^2)")?;
            }
            let x0 = initial_point(game, cfg, T::zero(), &mut rng)?;
            let n = rule.iterations(cfg.iterations);
            drive(game, cfg, snapshot, reference, x0, n, |x, t| Ok(sgm_nash_step(game, x, rule.at(t), &mut rng)))
        }
        Algorithm::Dfo => {
            let dcfg = cfg.dfo.clone().unwrap_or_default();
            let dfo = DerivativeFreeConfig::new(game, T::lit(dcfg.radius))?;
            let rule = step_rule(cfg, constants, StepRule::Harmonic(T::lit(positive(dcfg.eta0, "dfo eta0")?)))?;
            let x0 = initial_point(game, cfg, dfo.shrink(), &mut rng)?;
            let n = rule.iterations(cfg.iterations);
            drive(game, cfg, snapshot, reference, x0, n, |x, t| Ok(dfo_step(game, x, &dfo, rule.at(t), &mut rng)))
        }
        Algorithm::Agm => {
            if cfg.step_size.is_some() || cfg.schedule.is_some() {
                return Err(GameError::Config("agm uses its own step sizes; remove step_size/schedule".into()));
            }
            let kind = cfg.agm.clone().unwrap_or_default().noise_kind;
            let noise = NoiseModel::new(kind, game.dims());
            let x0 = initial_point(game, cfg, T::zero(), &mut rng)?;
            let mut state = AdaptiveState::from_zero(game, constants, &noise, x0.clone())?;
            if cfg.strict_mode {
                strict_bound(state.nu(), two / noise.r_sq, false, "agm requires nu < 2/R^2")?;
            }
            debug!("agm: k0 = {}, q0 = {}, Z = {}", state.k0, state.q0, state.z);
            drive(game, cfg, snapshot, reference, x0, cfg.iterations, |x, _| {
                state.x = x.clone();
                agm_step(game, &mut state, &noise, &mut rng);
                Ok(state.x.clone())
            })
        }
    }
}

fn drive<T: Scalar>(
    game: &GameInstance<T>,
    cfg: &SolverConfig,
    snapshot: serde_json::Value,
    reference: Option<&BlockVector<T>>,
    x0: BlockVector<T>,
    iterations: usize,
    mut step: impl FnMut(&BlockVector<T>, usize) -> Result<BlockVector<T>>,
) -> Result<Trajectory> {
    let every = cfg.record_every.unwrap_or_else(|| default_record_every(iterations));
    let mut rec = Recorder::new(game, reference, every);
    let mut x = x0;
    let mut done = 0;
    if rec.observe(0, &x) {
        for t in 1..=iterations {
            x = step(&x, t)?;
            done = t;
            if !rec.observe(t, &x) {
                break;
            }
        }
    }
    Ok(rec.finish(cfg.label(), cfg.seed, done, &x, snapshot))
}

#[allow(clippy::too_many_arguments)]
/// Runs `K + 1` epochs of `step_fn` with the schedule's step sizes, carrying
/// the last iterate of each epoch into the next.
pub fn run_step_decay<T: Scalar, R: Rng + ?Sized>(
    game: &GameInstance<T>,
    x0: BlockVector<T>,
    schedule: &StepDecaySchedule<T>,
    rng: &mut R,
    mut step_fn: impl FnMut(&GameInstance<T>, &BlockVector<T>, T, &mut R) -> BlockVector<T>,
    reference: Option<&BlockVector<T>>,
    label: &str,
    seed: u64,
) -> Trajectory {
    let total = schedule.total_iterations();
    let mut rec = Recorder::new(game, reference, default_record_every(total));
    let mut x = x0;
    let mut t = 0;
    let mut alive = rec.observe(0, &x);
    for &(eta, len) in &schedule.epochs {
        for _ in 0..len {
            if !alive {
                break;
            }
            x = step_fn(game, &x, eta, rng);
            t += 1;
            alive = rec.observe(t, &x);
        }
    }
    let snapshot = serde_json::to_value(schedule).expect("schedule serializes");
    rec.finish(label.to_string(), seed, t, &x, snapshot)
}
