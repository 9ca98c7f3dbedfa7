//! Equilibrium-seeking algorithms: repeated retraining, repeated
//! (stochastic) gradient play, the derivative-free method, the stochastic
//! gradient method on the full gradient, and the adaptive gradient method.

pub mod adaptive;
pub mod config;
pub mod schedule;
pub mod steps;
pub mod trajectory;

pub use adaptive::{agm_step, online_ls_update, AdaptiveState, NoiseKind, NoiseModel};
pub use config::{run_solver, run_step_decay, AgmConfig, Algorithm, DfoConfig, ScheduleConfig, SolverConfig, StepRule};
pub use schedule::{ScheduleFlavor, StepDecaySchedule};
pub use steps::{
    dfo_step, dfo_update, repeated_gradient_step, retrain_step, rsgm_direction, rsgm_step, sgm_nash_direction,
    sgm_nash_step, sphere_sample, DerivativeFreeConfig, Retrainer,
};
pub use trajectory::{Record, Recorder, Trajectory};
