//! Experiment configuration: a JSON document merged key by key over the
//! built-in defaults, which reproduce the rect experiment.

use std::path::Path;

use contfit_core::bspline::SplineSpace;
use contfit_core::hyperopt::{BoConfig, GridSpec, HyperBounds};
use contfit_core::inr::{Architecture, TrainConfig};
use contfit_core::{EvalGrid, RngSeed};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// `count` evenly spaced values from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Ladder {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.start + step * k as f64).collect()
    }

    fn validate(&self, what: &str) -> CliResult<()> {
        if self.count == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Config(format!("{what}: ladder needs count >= 1 and finite ends")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n_samples: usize,
    pub train_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridConfig {
    pub fn build(&self) -> CliResult<EvalGrid> {
        Ok(EvalGrid::square(self.lo, self.hi, self.n)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsplineConfig {
    pub log10_lambda: Ladder,
    pub knots: Vec<usize>,
    pub space: SplineSpace,
}

/// Per-run INR settings. `train.seed` is ignored; seeds derive from the
/// experiment seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InrConfig {
    pub architecture: Architecture,
    pub train: TrainConfig,
}

/// A number, or `"auto"` to take the value selected by the bilevel run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoValue {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightDecayGrid {
    pub log10_lambda_enc: Ladder,
    pub log10_lambda_mlp: Ladder,
    pub learning_rate: AutoValue,
    pub scale: AutoValue,
}

impl WeightDecayGrid {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            log10_lambda_enc: self.log10_lambda_enc.values(),
            log10_lambda_mlp: self.log10_lambda_mlp.values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilevelConfig {
    pub bounds: HyperBounds,
    pub optimizer: BoConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed: samples use it directly, everything else derives from it.
    pub seed: u64,
    pub data: DataConfig,
    pub eval_grid: GridConfig,
    /// Row of the cross-section output (nearest grid row is used).
    pub cross_section_y: f64,
    pub bspline: BsplineConfig,
    pub inr: InrConfig,
    pub weight_decay_grid: WeightDecayGrid,
    pub bilevel: BilevelConfig,
    /// Worker threads; `null` uses every available core.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ladder = |start, stop, count| Ladder { start, stop, count };
        ExperimentConfig {
            seed: 7,
            data: DataConfig { n_samples: 10_000, train_fraction: 0.8 },
            eval_grid: GridConfig { lo: -0.3, hi: 3.3, n: 501 },
            cross_section_y: 1.5,
            bspline: BsplineConfig {
                log10_lambda: ladder(-5.0, 5.0, 101),
                knots: (1..=20).map(|k| 5 * k).collect(),
                space: SplineSpace::default(),
            },
            inr: InrConfig {
                architecture: Architecture::default(),
                train: TrainConfig { lambda_enc: 8e-3, lambda_mlp: 1e-6, ..TrainConfig::default() },
            },
            weight_decay_grid: WeightDecayGrid {
                log10_lambda_enc: ladder(-4.0, -1.0, 31),
                log10_lambda_mlp: ladder(-9.0, -6.0, 31),
                learning_rate: AutoValue::Auto(AutoTag::Auto),
                scale: AutoValue::Auto(AutoTag::Auto),
            },
            bilevel: BilevelConfig { bounds: HyperBounds::default(), optimizer: BoConfig::default() },
            workers: None,
        }
    }
}

/// Seed streams derived from the master seed.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const INR_FIXED: u64 = 2;
    pub const GRID: u64 = 3;
    pub const BILEVEL: u64 = 4;
}

impl ExperimentConfig {
    pub fn master_seed(&self) -> RngSeed {
        RngSeed(self.seed)
    }

    pub fn stream(&self, k: u64) -> RngSeed {
        self.master_seed().derive(k)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.check().map_err(|e| match e {
            CliError::Numerical(e) => CliError::Config(e.to_string()),
            other => other,
        })
    }

    fn check(&self) -> CliResult<()> {
        let f = self.data.train_fraction;
        if self.data.n_samples == 0 || !(f > 0.0 && f < 1.0) {
            return Err(CliError::Config("data: need n_samples >= 1 and 0 < train_fraction < 1".into()));
        }
        self.eval_grid.build()?;
        if !self.cross_section_y.is_finite() {
            return Err(CliError::Config("cross_section_y must be finite".into()));
        }
        self.bspline.log10_lambda.validate("bspline.log10_lambda")?;
        if self.bspline.knots.is_empty() {
            return Err(CliError::Config("bspline.knots must not be empty".into()));
        }
        for &m in &self.bspline.knots {
            self.bspline.space.config(m)?;
        }
        self.inr.architecture.validate()?;
        self.inr.train.validate()?;
        let g = &self.weight_decay_grid;
        g.log10_lambda_enc.validate("weight_decay_grid.log10_lambda_enc")?;
        g.log10_lambda_mlp.validate("weight_decay_grid.log10_lambda_mlp")?;
        for (name, v) in [("learning_rate", g.learning_rate), ("scale", g.scale)] {
            if let AutoValue::Value(x) = v {
                if !x.is_finite() {
                    return Err(CliError::Config(format!("weight_decay_grid.{name} must be finite")));
                }
            }
        }
        self.bilevel.bounds.validate()?;
        let bo = &self.bilevel.optimizer;
        if bo.initial_design == 0 || bo.budget < bo.initial_design || bo.candidates == 0 {
            return Err(CliError::Config("bilevel.optimizer: need 1 <= initial_design <= budget and candidates >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Defaults overlaid with `overrides` (objects merge recursively, every
    /// other value replaces).
    pub fn from_value(overrides: Value) -> CliResult<Self> {
        let mut base = serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize");
        merge(&mut base, overrides);
        let cfg: ExperimentConfig =
            serde_json::from_value(base).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_value(v)
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_validate_and_round_trip() {
        let d = ExperimentConfig::default();
        d.validate().unwrap();
        assert_eq!(ExperimentConfig::from_value(json!({})).unwrap(), d);
        assert_eq!(d.bspline.log10_lambda.values().len(), 101);
        assert_eq!(d.bspline.knots.len(), 20);
    }

    #[test]
    fn partial_override_keeps_siblings() {
        let c = ExperimentConfig::from_value(json!({"data": {"n_samples": 10}})).unwrap();
        assert_eq!(c.data.n_samples, 10);
        assert_eq!(c.data.train_fraction, 0.8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::from_value(json!({"dta": {}})), Err(CliError::Config(_))));
        assert!(ExperimentConfig::from_value(json!({"data": {"n": 3}})).is_err());
    }

    #[test]
    fn auto_or_number() {
        let c = ExperimentConfig::from_value(json!({"weight_decay_grid": {"learning_rate": 0.01}})).unwrap();
        assert_eq!(c.weight_decay_grid.learning_rate, AutoValue::Value(0.01));
        assert_eq!(c.weight_decay_grid.scale, AutoValue::Auto(AutoTag::Auto));
        assert!(ExperimentConfig::from_value(json!({"weight_decay_grid": {"scale": "sometimes"}})).is_err());
    }
}
