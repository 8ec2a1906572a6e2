//! Penalized mean-squared loss and its exact reverse-mode gradient.

use alloc::vec;
use alloc::vec::Vec;

use super::encoder::EncodingPlan;
use super::gemm;
use super::model::InrModel;
use crate::data::SampleSet;
use crate::error::{Error, Result};

/// Points per forward/backward pass; keeps activations cache-resident.
const CHUNK: usize = 256;

/// Loss value split into its data and penalty parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    /// `(1/N) ||y - f(z)||^2`.
    pub data: f64,
    /// `lambda_enc ||theta_enc||^2 + lambda_mlp ||theta_mlp||^2`.
    pub penalty: f64,
}

impl LossParts {
    pub fn total(&self) -> f64 {
        self.data + self.penalty
    }
}

/// Fixed batch (coordinates and targets) with reusable scratch buffers.
#[derive(Debug, Clone)]
pub struct Objective {
    plan: EncodingPlan,
    targets: Vec<f64>,
    enc: Vec<f64>,
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Objective {
    pub fn new(model: &InrModel, batch: &SampleSet) -> Self {
        let plan = EncodingPlan::new(batch.coords(), &model.architecture().encoder);
        Objective {
            plan,
            targets: batch.values().to_vec(),
            enc: Vec::new(),
            acts: vec![Vec::new(); model.layout().layers.len()],
            delta: Vec::new(),
            delta_prev: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Encode and run the MLP on points `lo..lo + rows`.
    fn predict(&mut self, model: &InrModel, lo: usize, rows: usize) {
        self.enc.resize(rows * model.architecture().encoder.output_dim(), 0.0);
        model.encode_plan(&self.plan, lo..lo + rows, &mut self.enc);
        model.mlp_forward(&self.enc, rows, &mut self.acts);
    }

    /// Mean squared error of the model on this batch (no penalty).
    pub fn data_loss(&mut self, model: &InrModel) -> f64 {
        let n = self.targets.len();
        let mut sse = 0.0;
        for lo in (0..n).step_by(CHUNK) {
            let rows = CHUNK.min(n - lo);
            self.predict(model, lo, rows);
            sse += sq_err(self.acts.last().unwrap(), &self.targets[lo..lo + rows]);
        }
        sse / n as f64
    }

    /// Evaluate the penalized loss and write its gradient into `grad`
    /// (resized to the parameter count).
    pub fn loss_and_grad(
        &mut self,
        model: &InrModel,
        lambda_enc: f64,
        lambda_mlp: f64,
        grad: &mut Vec<f64>,
    ) -> LossParts {
        let n = self.targets.len();
        let layout = model.layout();
        let params = model.params();
        grad.clear();
        grad.resize(layout.len(), 0.0);

        // d(data)/d(pred) = 2 (pred - y) / N
        let scale = 2.0 / n as f64;
        let mut sse = 0.0;
        for lo in (0..n).step_by(CHUNK) {
            let rows = CHUNK.min(n - lo);
            self.predict(model, lo, rows);
            let pred = self.acts.last().unwrap();
            let targets = &self.targets[lo..lo + rows];
            sse += sq_err(pred, targets);
            self.delta.clear();
            self.delta.extend(pred.iter().zip(targets).map(|(p, y)| scale * (p - y)));
            self.backward(model, lo, rows, grad);
        }
        let data = sse / n as f64;

        let split = layout.encoder_len;
        let penalty = add_penalty(&params[..split], &mut grad[..split], lambda_enc)
            + add_penalty(&params[split..], &mut grad[split..], lambda_mlp);
        LossParts { data, penalty }
    }

    /// Accumulate the data gradient of one chunk, starting from `self.delta`
    /// holding d(data)/d(output) for its rows.
    fn backward(&mut self, model: &InrModel, lo: usize, rows: usize, grad: &mut [f64]) {
        let layout = model.layout();
        let params = model.params();
        for (i, s) in layout.layers.iter().enumerate().rev() {
            let x: &[f64] = if i == 0 { &self.enc } else { &self.acts[i - 1] };
            // dW (outputs x inputs) += delta^T x
            gemm::mul_atb(s.outputs, rows, s.inputs, &self.delta, x, 1.0, &mut grad[s.weight..s.bias]);
            let db = &mut grad[s.bias..s.bias + s.outputs];
            for row in self.delta.chunks_exact(s.outputs) {
                for (g, d) in db.iter_mut().zip(row) {
                    *g += d;
                }
            }
            // back through the layer: delta_prev = delta W, masked by ReLU
            self.delta_prev.resize(rows * s.inputs, 0.0);
            gemm::mul_ab(rows, s.outputs, s.inputs, &self.delta, &params[s.weight..s.bias], 0.0, &mut self.delta_prev);
            if i > 0 {
                for (d, a) in self.delta_prev.iter_mut().zip(&self.acts[i - 1]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            core::mem::swap(&mut self.delta, &mut self.delta_prev);
        }

        // self.delta now holds d(data)/d(encoding); scatter into touched slots
        let enc_cfg = &model.architecture().encoder;
        let f = enc_cfg.features_per_level;
        let d = enc_cfg.output_dim();
        for (row, p) in self.delta.chunks_exact(d).zip(lo..lo + rows) {
            for (l, c) in self.plan.point(p).iter().enumerate() {
                let base = layout.tables[l];
                let g_in = &row[l * f..(l + 1) * f];
                for k in 0..4 {
                    let w = c.weight[k];
                    if w == 0.0 {
                        continue;
                    }
                    let e = base + c.index[k] as usize * f;
                    for (g, v) in grad[e..e + f].iter_mut().zip(g_in) {
                        *g += w * v;
                    }
                }
            }
        }
    }
}

/// Adds `2 lambda theta` to `grad`, returns `lambda ||theta||^2`.
fn add_penalty(theta: &[f64], grad: &mut [f64], lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let mut sq = 0.0;
    for (g, t) in grad.iter_mut().zip(theta) {
        *g += 2.0 * lambda * t;
        sq += t * t;
    }
    lambda * sq
}

fn sq_err(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum()
}

/// One-shot loss and gradient of `model` on `batch`.
pub fn loss_and_grad(
    model: &InrModel,
    batch: &SampleSet,
    lambda_enc: f64,
    lambda_mlp: f64,
) -> Result<(LossParts, Vec<f64>)> {
    if !(lambda_enc >= 0.0 && lambda_mlp >= 0.0) {
        return Err(Error::invalid("weight decays must be >= 0"));
    }
    let mut obj = Objective::new(model, batch);
    let mut grad = Vec::new();
    let loss = obj.loss_and_grad(model, lambda_enc, lambda_mlp, &mut grad);
    Ok((loss, grad))
}
