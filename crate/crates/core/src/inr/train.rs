use alloc::vec::Vec;
use alloc::format;

use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::grad::Objective;
use super::model::{Architecture, InrModel};
use crate::data::SampleSet;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda_enc: f64,
    pub lambda_mlp: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    pub seed: RngSeed,
    /// Half-width of the uniform table initialization.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda_enc: 0.0,
            lambda_mlp: 0.0,
            learning_rate: 3e-3,
            iterations: 2000,
            adam: AdamConfig::default(),
            seed: RngSeed(0),
            init_scale: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        if !nonneg(self.lambda_enc) || !nonneg(self.lambda_mlp) {
            return Err(Error::invalid("weight decays must be finite and >= 0"));
        }
        if !nonneg(self.learning_rate) {
            return Err(Error::invalid("learning rate must be finite and >= 0"));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be positive"));
        }
        let AdamConfig { beta1, beta2, eps } = self.adam;
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
            return Err(Error::invalid(format!("invalid Adam constants {beta1}, {beta2}, {eps}")));
        }
        if !nonneg(self.init_scale) {
            return Err(Error::invalid("init scale must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: InrModel,
    /// Penalized loss before each update.
    pub loss_trace: Vec<f64>,
    /// Data (MSE) part of the loss before each update.
    pub data_trace: Vec<f64>,
    /// Training MSE after the last update.
    pub final_data_loss: f64,
}

/// Full-batch Adam on the penalized loss, starting from a seeded init.
pub fn train(samples: &SampleSet, arch: &Architecture, cfg: &TrainConfig) -> Result<Trained> {
    cfg.validate()?;
    let mut model = InrModel::init(arch.clone(), cfg.init_scale, cfg.seed)?;
    let mut objective = Objective::new(&model, samples);
    let mut state = AdamState::new(model.layout().len());
    let mut grad = Vec::new();
    let mut loss_trace = Vec::with_capacity(cfg.iterations);
    let mut data_trace = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let loss = objective.loss_and_grad(&model, cfg.lambda_enc, cfg.lambda_mlp, &mut grad);
        let total = loss.total();
        if !total.is_finite() {
            return Err(Error::NonFiniteLoss { iteration: it, value: total });
        }
        loss_trace.push(total);
        data_trace.push(loss.data);
        state.step(model.params_mut(), &grad, cfg.learning_rate, &cfg.adam);
    }
    let final_data_loss = objective.data_loss(&model);
    if !final_data_loss.is_finite() {
        return Err(Error::NonFiniteLoss { iteration: cfg.iterations, value: final_data_loss });
    }
    Ok(Trained { model, loss_trace, data_trace, final_data_loss })
}
