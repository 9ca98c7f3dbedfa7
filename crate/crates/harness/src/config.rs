//! Experiment configuration files.
//!
//! ```json
//! {
//!   "game": "scalar_duopoly.json",
//!   "reference": "auto",
//!   "solvers": [
//!     {"algorithm": "rsgm", "step_size": 0.01, "iterations": 20000},
//!     {"algorithm": "sgm", "step_size": 0.01, "iterations": 20000}
//!   ],
//!   "seeds": [1, 2, 3],
//!   "metrics": ["error_sq", "efficiency"],
//!   "outdir": "out/duopoly",
//!   "plots": true
//! }
//! ```
//!
//! `game` is resolved against the directory of the config file. With
//! `"reference": "auto"` every solver is measured against the point it
//! targets (Nash for `sgm`, `dfo`, `agm`; the stable point otherwise).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use perfgame_core::{Algorithm, EquilibriumKind, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Environment variable that replaces the configured seed list.
pub const SEED_ENV: &str = "PERFGAME_SEED";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    #[default]
    Auto,
    Nash,
    PerfStable,
    SocialOpt,
}

impl ReferenceKind {
    pub fn resolve(self, alg: Algorithm) -> EquilibriumKind {
        match self {
            ReferenceKind::Auto if alg.targets_nash() => EquilibriumKind::Nash,
            ReferenceKind::Auto => EquilibriumKind::PerfStable,
            ReferenceKind::Nash => EquilibriumKind::Nash,
            ReferenceKind::PerfStable => EquilibriumKind::PerfStable,
            ReferenceKind::SocialOpt => EquilibriumKind::SocialOpt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Squared distance to the reference point (always recorded).
    ErrorSq,
    /// Social costs and price of anarchy at the three equilibria.
    Efficiency,
}

fn default_metrics() -> Vec<Metric> {
    vec![Metric::ErrorSq]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: PathBuf,
    #[serde(default)]
    pub reference: ReferenceKind,
    pub solvers: Vec<SolverConfig>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    pub outdir: PathBuf,
    /// Emit SVG log-log plots of the mean curves.
    #[serde(default)]
    pub plots: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file, resolves `game` against its directory and
    /// applies the seed override from [`SEED_ENV`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        if cfg.game.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.game = dir.join(&cfg.game);
            }
        }
        if let Ok(value) = std::env::var(SEED_ENV) {
            cfg.override_seeds(&value)?;
        }
        Ok(cfg)
    }

    /// Replaces the seed list by a comma-separated list such as `"7"` or `"1,2,3"`.
    pub fn override_seeds(&mut self, value: &str) -> Result<()> {
        let seeds = value
            .split(',')
            .map(|s| s.trim().parse::<u64>().map_err(|e| HarnessError::Config(format!("{SEED_ENV}={value}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        self.seeds = seeds;
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("at least one seed is required".into()));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Config("at least one solver is required".into()));
        }
        let mut labels = BTreeSet::new();
        for s in &self.solvers {
            let label = s.label();
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                return Err(HarnessError::Config(format!("solver label '{label}' must be [A-Za-z0-9_-]+")));
            }
            if !labels.insert(label.clone()) {
                return Err(HarnessError::Config(format!("duplicate solver label '{label}'")));
            }
        }
        let unique: BTreeSet<_> = self.seeds.iter().collect();
        if unique.len() != self.seeds.len() {
            return Err(HarnessError::Config("seeds must be distinct".into()));
        }
        Ok(())
    }

    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"{"game": "g.json", "solvers": [{"algorithm": "rsgm"}], "seeds": [3], "outdir": "out"}"#;

    #[test]
    fn defaults() {
        let cfg = ExperimentConfig::from_json(BASIC).unwrap();
        assert_eq!(cfg.reference, ReferenceKind::Auto);
        assert_eq!(cfg.metrics, vec![Metric::ErrorSq]);
        assert!(!cfg.plots);
        assert_eq!(ReferenceKind::Auto.resolve(Algorithm::Sgm), EquilibriumKind::Nash);
        assert_eq!(ReferenceKind::Auto.resolve(Algorithm::Rsgm), EquilibriumKind::PerfStable);
    }

    #[test]
    fn rejects_bad_configs() {
        let no_seeds = BASIC.replace("[3]", "[]");
        assert!(ExperimentConfig::from_json(&no_seeds).is_err());
        let dup = BASIC.replace(r#"[{"algorithm": "rsgm"}]"#, r#"[{"algorithm": "rsgm"}, {"algorithm": "rsgm"}]"#);
        assert!(ExperimentConfig::from_json(&dup).is_err());
        let unknown = BASIC.replace(r#""outdir""#, r#""colour": 1, "outdir""#);
        assert!(ExperimentConfig::from_json(&unknown).is_err());
        let path = BASIC.replace(r#"{"algorithm": "rsgm"}"#, r#"{"algorithm": "rsgm", "name": "../x"}"#);
        assert!(ExperimentConfig::from_json(&path).is_err());
    }

    #[test]
    fn seed_override() {
        let mut cfg = ExperimentConfig::from_json(BASIC).unwrap();
        cfg.override_seeds("4, 5").unwrap();
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert!(cfg.override_seeds("x").is_err());
    }
}
