//! Grid searches over the two weight decays with fixed learning rate and
//! encoder scale.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{eval_grid_coords, nrmse, EvalGrid, SampleSet};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::inr::{train, Architecture, InrModel, TrainConfig};
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Train on every sample, score NRMSE against the truth grid.
    Oracle100,
    /// Train on the training split, score NRMSE against the truth grid.
    Oracle80,
    /// Train on the training split, score validation MSE.
    Validation,
}

/// What a cell trains on and how it is scored. Each variant carries only the
/// data its criterion may touch.
#[derive(Debug, Clone, Copy)]
pub enum GridTask<'a> {
    Oracle100 { samples: &'a SampleSet, grid: &'a EvalGrid },
    Oracle80 { train: &'a SampleSet, grid: &'a EvalGrid },
    Validation { train: &'a SampleSet, validation: &'a SampleSet },
}

impl<'a> GridTask<'a> {
    pub fn criterion(&self) -> Criterion {
        match self {
            GridTask::Oracle100 { .. } => Criterion::Oracle100,
            GridTask::Oracle80 { .. } => Criterion::Oracle80,
            GridTask::Validation { .. } => Criterion::Validation,
        }
    }

    pub fn training_set(&self) -> &'a SampleSet {
        match *self {
            GridTask::Oracle100 { samples, .. } => samples,
            GridTask::Oracle80 { train, .. } | GridTask::Validation { train, .. } => train,
        }
    }

    /// Score a trained model under this task's criterion.
    pub fn score(&self, model: &InrModel) -> Result<f64> {
        match *self {
            GridTask::Oracle100 { grid, .. } | GridTask::Oracle80 { grid, .. } => {
                let pred = model.forward(&eval_grid_coords(grid))?;
                nrmse(&pred, grid.truth()?)
            }
            GridTask::Validation { validation, .. } => validation_loss(model, validation),
        }
    }
}

/// `log10` ladders for the encoder and MLP weight decays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub log10_lambda_enc: Vec<f64>,
    pub log10_lambda_mlp: Vec<f64>,
}

impl GridSpec {
    /// `n` evenly spaced values per axis over the given log10 ranges.
    pub fn linspace(enc: [f64; 2], mlp: [f64; 2], n_enc: usize, n_mlp: usize) -> Self {
        let ladder = |[lo, hi]: [f64; 2], n: usize| -> Vec<f64> {
            if n == 1 {
                return alloc::vec![lo];
            }
            (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
        };
        GridSpec { log10_lambda_enc: ladder(enc, n_enc), log10_lambda_mlp: ladder(mlp, n_mlp) }
    }

    pub fn len(&self) -> usize {
        self.log10_lambda_enc.len() * self.log10_lambda_mlp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(log10 lambda_enc, log10 lambda_mlp)` of cell `index` (encoder-major).
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let n = self.log10_lambda_mlp.len();
        (self.log10_lambda_enc[index / n], self.log10_lambda_mlp[index % n])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCellResult {
    pub index: usize,
    pub log10_lambda_enc: f64,
    pub log10_lambda_mlp: f64,
    pub seed: RngSeed,
    /// `None` when training diverged.
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best: Option<GridCellResult>,
    pub table: Vec<GridCellResult>,
}

/// Mean squared error of `model` on the validation samples.
pub fn validation_loss(model: &InrModel, validation: &SampleSet) -> Result<f64> {
    let pred = model.forward(validation.coords())?;
    let s: f64 = pred.iter().zip(validation.values()).map(|(p, y)| (p - y) * (p - y)).sum();
    Ok(s / validation.len() as f64)
}

/// Training configuration of grid cell `index`: the template with the cell's
/// decays and seed `template.seed.derive(index)`.
pub fn cell_train_config(spec: &GridSpec, template: &TrainConfig, index: usize) -> TrainConfig {
    let (e, m) = spec.cell(index);
    TrainConfig {
        lambda_enc: libm::pow(10.0, e),
        lambda_mlp: libm::pow(10.0, m),
        seed: template.seed.derive(index as u64),
        ..template.clone()
    }
}

/// Train and score one cell. Divergence is a failed cell, not an error.
pub fn evaluate_cell(
    task: &GridTask<'_>,
    arch: &Architecture,
    template: &TrainConfig,
    spec: &GridSpec,
    index: usize,
) -> Result<GridCellResult> {
    let cfg = cell_train_config(spec, template, index);
    let (e, m) = spec.cell(index);
    let objective = match train(task.training_set(), arch, &cfg) {
        Ok(t) => Some(task.score(&t.model)?).filter(|v| v.is_finite()),
        Err(Error::NonFiniteLoss { .. }) | Err(Error::NonFiniteParameter { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(GridCellResult { index, log10_lambda_enc: e, log10_lambda_mlp: m, seed: cfg.seed, objective })
}

/// Argmin over successful cells; ties go to the smaller
/// `(lambda_enc, lambda_mlp)` pair.
pub fn select_best(table: &[GridCellResult]) -> Option<GridCellResult> {
    table
        .iter()
        .filter_map(|c| c.objective.map(|v| (v, c)))
        .min_by(|(va, a), (vb, b)| {
            va.total_cmp(vb)
                .then(a.log10_lambda_enc.total_cmp(&b.log10_lambda_enc))
                .then(a.log10_lambda_mlp.total_cmp(&b.log10_lambda_mlp))
        })
        .map(|(_, c)| c.clone())
}

/// Train one model per `(lambda_enc, lambda_mlp)` cell and pick the best.
pub fn grid_search_inr<E: Executor>(
    task: &GridTask<'_>,
    arch: &Architecture,
    template: &TrainConfig,
    spec: &GridSpec,
    exec: &E,
) -> Result<GridSearch> {
    if spec.is_empty() {
        return Err(Error::invalid("weight-decay grid is empty"));
    }
    let table = exec
        .map(spec.len(), |i| evaluate_cell(task, arch, template, spec, i))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(GridSearch { best: select_best(&table), table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_indexing_is_encoder_major() {
        let g = GridSpec::linspace([-4.0, -1.0], [-9.0, -6.0], 7, 7);
        assert_eq!(g.len(), 49);
        assert_eq!(g.cell(0), (-4.0, -9.0));
        assert_eq!(g.cell(8), (-3.5, -8.5));
        assert_eq!(g.cell(48), (-1.0, -6.0));
    }

    #[test]
    fn ties_prefer_smaller_decays() {
        let c = |i, e, m, v| GridCellResult {
            index: i,
            log10_lambda_enc: e,
            log10_lambda_mlp: m,
            seed: RngSeed(0),
            objective: v,
        };
        let t = [c(0, -2.0, -7.0, Some(0.5)), c(1, -3.0, -8.0, Some(0.5)), c(2, -4.0, -9.0, None)];
        assert_eq!(select_best(&t).unwrap().index, 1);
    }
}
