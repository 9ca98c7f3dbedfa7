//! Seeded multi-run experiments on decision-dependent games: aggregate error
//! curves, social-cost efficiency, myopic-player studies, a synthetic
//! ride-share market, and CSV/JSON/SVG output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod config;
pub mod efficiency;
pub mod error;
pub mod experiment;
pub mod myopic;
pub mod rideshare;

pub use artifacts::emit_artifacts;
pub use config::{ExperimentConfig, Metric, ReferenceKind};
pub use efficiency::{efficiency_report, EfficiencyReport};
pub use error::{HarnessError, Result};
pub use experiment::{aggregate, run_experiment, run_experiment_on, AggregatePoint, ExperimentOutput, ExperimentReport};
pub use myopic::{myopic_study, MyopicConfig, MyopicReport, PlayerMode};
pub use rideshare::{gen_rideshare, RideShareInstance, RideShareParams};
