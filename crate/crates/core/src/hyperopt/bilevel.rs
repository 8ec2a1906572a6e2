//! Bilevel selection: the outer problem minimizes validation loss over the
//! hyperparameter box, the inner problem trains on the training split.

use super::bayes::{bayes_optimize, BoConfig, BoResult, Clock};
use super::grid::validation_loss;
use super::hyper::{HyperBounds, HyperVector, SearchRecord};
use crate::data::SampleSet;
use crate::error::Result;
use crate::exec::Executor;
use crate::inr::{train, Architecture, TrainConfig, Trained};
use crate::rng::RngSeed;

#[derive(Debug, Clone)]
pub struct BilevelResult {
    pub search: BoResult,
    /// Model retrained on every sample at the selected hyperparameters.
    pub refit: Trained,
}

/// Architecture and training configuration realizing `h` (decays, learning
/// rate and encoder scale) with the given seed.
pub fn apply_hyper(arch: &Architecture, template: &TrainConfig, h: &HyperVector, seed: RngSeed) -> (Architecture, TrainConfig) {
    let mut a = arch.clone();
    a.encoder.scale = h.b;
    let cfg = TrainConfig {
        lambda_enc: h.lambda_enc(),
        lambda_mlp: h.lambda_mlp(),
        learning_rate: h.tau(),
        seed,
        ..template.clone()
    };
    (a, cfg)
}

/// Run the outer Bayesian optimization, then refit on all samples at the
/// incumbent using the incumbent's seed.
#[allow(clippy::too_many_arguments)]
pub fn bilevel_optimize<E, C, R>(
    samples: &SampleSet,
    arch: &Architecture,
    template: &TrainConfig,
    bounds: &HyperBounds,
    bo: &BoConfig,
    prior: &[SearchRecord],
    exec: &E,
    clock: &C,
    on_record: R,
) -> Result<BilevelResult>
where
    E: Executor,
    C: Clock,
    R: FnMut(&SearchRecord),
{
    let train_set = samples.train_set()?;
    let val_set = samples.validation_set()?;
    let objective = |h: &HyperVector, seed: RngSeed| -> Result<f64> {
        let (a, cfg) = apply_hyper(arch, template, h, seed);
        let trained = train(&train_set, &a, &cfg)?;
        validation_loss(&trained.model, &val_set)
    };
    let search = bayes_optimize(bounds, bo, prior, objective, exec, clock, on_record)?;
    let (a, cfg) = apply_hyper(arch, template, &search.best.hyper, search.best.seed);
    let refit = train(samples, &a, &cfg)?;
    Ok(BilevelResult { search, refit })
}
