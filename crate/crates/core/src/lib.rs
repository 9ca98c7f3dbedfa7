//! Multiplayer performative prediction: games whose data distributions react
//! to every player's decision.
//!
//! The crate is generic over the working precision through [`Scalar`]; the
//! aliases below fix it to `f64` (and `f32` where a lighter footprint is
//! wanted).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod game;
pub mod linalg;
pub mod oracles;
pub mod scalar;
pub mod solvers;

pub use error::{GameError, Result};
pub use game::{
    compute_constants, BaseDistribution, BlockVector, FeasibleSet, GameConstants, GameDims, GameInstance, GameSpec,
    LocationFamily, LossModel, SetDescriptor,
};
pub use oracles::{
    certify_monotone, solve_nash, solve_perf_stable, solve_social_opt, EquilibriumKind, EquilibriumReport, HMonotone,
    MonotonicityCertificate, SolveMethod,
};
pub use scalar::Scalar;
pub use solvers::{run_solver, Algorithm, SolverConfig, Trajectory};

pub type Game = GameInstance<f64>;
pub type Game32 = GameInstance<f32>;
pub type Vector = BlockVector<f64>;
pub type Constants = GameConstants<f64>;
pub type Report = EquilibriumReport<f64>;
pub type Certificate = MonotonicityCertificate<f64>;
