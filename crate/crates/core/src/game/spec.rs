//! JSON game files.
//!
//! ```json
//! {
//!   "dims": {"decision": [1, 1], "data": [1, 1]},
//!   "feasible": [{"type": "whole_space"}, {"type": "box", "lower": [-1], "upper": [1]}],
//!   "family": [
//!     {"base": {"type": "gaussian", "mean": [1], "cov": [[0.01]]}, "own": [[-1]], "cross": [[0.5]]},
//!     {"base": {"type": "deterministic", "mean": [1]}, "own": [[-1]], "cross": [[0.5]]}
//!   ],
//!   "losses": [{"type": "revenue", "lambda": 2, "scale": 1}, {"type": "revenue", "lambda": 2, "scale": 1}],
//!   "separable": true
//! }
//! ```
//!
//! Other base types are `{"type": "empirical", "samples": [[..], ..]}`. Other
//! loss types are `{"type": "strategic_prediction", "feature_mean": [[..]],
//! "feature_std": s, "truth": [..]}` and `{"type": "quadratic", "hessian":
//! [[..]], "linear": [..]}` where the quadratic acts on `(x, z_i)` stacked. An
//! empty `cross` list stands for a zero competitor-effect matrix. Unknown keys
//! are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{structural, GameError, Result};
use crate::game::dims::GameDims;
use crate::game::family::{BaseDistribution, LocationFamily, PlayerFamily};
use crate::game::feasible::{FeasibleSet, SetDescriptor};
use crate::game::instance::GameInstance;
use crate::game::loss::{FeatureModel, LossModel};
use crate::linalg::Matrix;
use crate::scalar::{convert_vec, to_f64_vec, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub dims: GameDims,
    pub feasible: Vec<SetSpec>,
    pub family: Vec<FamilySpec>,
    pub losses: Vec<LossSpec>,
    pub separable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    WholeSpace {},
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub base: BaseSpec,
    pub own: Vec<Vec<f64>>,
    #[serde(default)]
    pub cross: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSpec {
    Deterministic { mean: Vec<f64> },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    Empirical { samples: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    Revenue { lambda: f64, scale: f64 },
    StrategicPrediction { feature_mean: Vec<Vec<f64>>, feature_std: f64, truth: Vec<f64> },
    Quadratic { hessian: Vec<Vec<f64>>, linear: Vec<f64> },
}

fn matrix<T: Scalar>(rows: &[Vec<f64>], r: usize, c: usize, what: &str) -> Result<Matrix<T>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(structural(format!("{what} must be a {r}x{c} nested array")));
    }
    let data: Vec<T> = rows.iter().flat_map(|row| row.iter().map(|&v| T::lit(v))).collect();
    Matrix::new(r, c, data)
}

fn rows<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<f64>> {
    m.to_rows().iter().map(|r| to_f64_vec(r)).collect()
}

impl GameSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GameError::Config(format!("game file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GameError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| GameError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("game spec serializes")
    }

    pub fn build<T: Scalar>(&self) -> Result<GameInstance<T>> {
        let dims = self.dims.clone();
        let n = dims.players();
        if self.feasible.len() != n || self.family.len() != n || self.losses.len() != n {
            return Err(structural(format!("feasible, family and losses must each list {n} players")));
        }
        let sets = self
            .feasible
            .iter()
            .map(|s| match s {
                SetSpec::WholeSpace {} => SetDescriptor::WholeSpace,
                SetSpec::Box { lower, upper } => SetDescriptor::Box { lower: convert_vec(lower), upper: convert_vec(upper) },
                SetSpec::Ball { center, radius } => SetDescriptor::Ball { center: convert_vec(center), radius: T::lit(*radius) },
            })
            .collect();
        let feasible = FeasibleSet::new(&dims, sets)?;

        let mut players = Vec::with_capacity(n);
        for (i, f) in self.family.iter().enumerate() {
            let m = dims.data_dim(i);
            let base = match &f.base {
                BaseSpec::Deterministic { mean } => BaseDistribution::deterministic(convert_vec(mean)),
                BaseSpec::Gaussian { mean, cov } => {
                    BaseDistribution::gaussian(convert_vec(mean), matrix(cov, mean.len(), mean.len(), "gaussian cov")?)?
                }
                BaseSpec::Empirical { samples } => {
                    BaseDistribution::empirical(samples.iter().map(|s| convert_vec(s)).collect())?
                }
            };
            let own = matrix(&f.own, m, dims.decision_dim(i), &format!("player {i} own"))?;
            let cross = if f.cross.is_empty() {
                Matrix::zeros(m, dims.others_dim(i))
            } else {
                matrix(&f.cross, m, dims.others_dim(i), &format!("player {i} cross"))?
            };
            players.push(PlayerFamily::new(&dims, i, base, own, cross)?);
        }
        let family = LocationFamily::new(&dims, players)?;

        let mut losses = Vec::with_capacity(n);
        for (i, l) in self.losses.iter().enumerate() {
            let (d_i, m_i) = (dims.decision_dim(i), dims.data_dim(i));
            losses.push(match l {
                LossSpec::Revenue { lambda, scale } => LossModel::Revenue { lambda: T::lit(*lambda), scale: T::lit(*scale) },
                LossSpec::StrategicPrediction { feature_mean, feature_std, truth } => LossModel::StrategicPrediction {
                    features: FeatureModel { mean: matrix(feature_mean, d_i, m_i, "feature_mean")?, std: T::lit(*feature_std) },
                    truth: convert_vec(truth),
                },
                LossSpec::Quadratic { hessian, linear } => {
                    let k = dims.total() + m_i;
                    LossModel::QuadraticCustom { hessian: matrix(hessian, k, k, "quadratic hessian")?, linear: convert_vec(linear) }
                }
            });
        }
        GameInstance::new(dims, feasible, family, losses, self.separable)
    }

    pub fn from_game<T: Scalar>(game: &GameInstance<T>) -> Self {
        let feasible = game
            .feasible()
            .descriptors()
            .iter()
            .map(|s| match s {
                SetDescriptor::WholeSpace => SetSpec::WholeSpace {},
                SetDescriptor::Box { lower, upper } => SetSpec::Box { lower: to_f64_vec(lower), upper: to_f64_vec(upper) },
                SetDescriptor::Ball { center, radius } => SetSpec::Ball { center: to_f64_vec(center), radius: radius.as_f64() },
            })
            .collect();
        let family = game
            .family()
            .players()
            .iter()
            .map(|p| FamilySpec {
                base: match p.base() {
                    BaseDistribution::Deterministic { mean } => BaseSpec::Deterministic { mean: to_f64_vec(mean) },
                    BaseDistribution::Gaussian { mean, cov, .. } => BaseSpec::Gaussian { mean: to_f64_vec(mean), cov: rows(cov) },
                    BaseDistribution::Empirical { samples, .. } => {
                        BaseSpec::Empirical { samples: samples.iter().map(|s| to_f64_vec(s)).collect() }
                    }
                },
                own: rows(p.own()),
                cross: rows(p.cross()),
            })
            .collect();
        let losses = game
            .losses()
            .iter()
            .map(|l| match l {
                LossModel::Revenue { lambda, scale } => LossSpec::Revenue { lambda: lambda.as_f64(), scale: scale.as_f64() },
                LossModel::StrategicPrediction { features, truth } => LossSpec::StrategicPrediction {
                    feature_mean: rows(&features.mean),
                    feature_std: features.std.as_f64(),
                    truth: to_f64_vec(truth),
                },
                LossModel::QuadraticCustom { hessian, linear } => {
                    LossSpec::Quadratic { hessian: rows(hessian), linear: to_f64_vec(linear) }
                }
            })
            .collect();
        GameSpec { dims: game.dims().clone(), feasible, family, losses, separable: game.separable() }
    }
}
