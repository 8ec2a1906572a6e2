use alloc::vec;
use alloc::vec::Vec;
use alloc::format;
use core::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encoder::{EncoderConfig, EncodingPlan};
use super::gemm;
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Encoder plus MLP shape. The MLP maps `levels * features` inputs through
/// ReLU hidden layers of the given widths to one linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub encoder: EncoderConfig,
    pub hidden: Vec<usize>,
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture { encoder: EncoderConfig::default(), hidden: vec![64, 64] }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.hidden.len() + 2);
        w.push(self.encoder.output_dim());
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LayerSpan {
    pub inputs: usize,
    pub outputs: usize,
    /// Offset of the `outputs x inputs` row-major weight matrix.
    pub weight: usize,
    /// Offset of the `outputs` bias vector.
    pub bias: usize,
}

/// Offsets into the flat parameter vector.
///
/// Order: encoder tables level by level (entry-major, features innermost),
/// then for each MLP layer its weight matrix followed by its bias.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub(crate) tables: Vec<usize>,
    pub(crate) encoder_len: usize,
    pub(crate) layers: Vec<LayerSpan>,
    pub(crate) total: usize,
}

impl ParamLayout {
    pub fn new(arch: &Architecture) -> Self {
        let enc = &arch.encoder;
        let mut off = 0;
        let mut tables = Vec::with_capacity(enc.levels);
        for l in 0..enc.levels {
            tables.push(off);
            off += enc.table_entries(l) * enc.features_per_level;
        }
        let encoder_len = off;
        let widths = arch.widths();
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (inputs, outputs) = (pair[0], pair[1]);
            let weight = off;
            off += inputs * outputs;
            let bias = off;
            off += outputs;
            layers.push(LayerSpan { inputs, outputs, weight, bias });
        }
        ParamLayout { tables, encoder_len, layers, total: off }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Number of encoder-table parameters; they occupy `0..encoder_len()`.
    pub fn encoder_len(&self) -> usize {
        self.encoder_len
    }

    pub fn table_offset(&self, level: usize) -> usize {
        self.tables[level]
    }

    /// Human-readable location of flat parameter `k`.
    pub fn describe(&self, k: usize) -> alloc::string::String {
        if k < self.encoder_len {
            let level = self.tables.iter().rposition(|&o| o <= k).unwrap_or(0);
            return format!("encoder level {level}, offset {}", k - self.tables[level]);
        }
        for (i, s) in self.layers.iter().enumerate() {
            if k >= s.weight && k < s.bias {
                let r = k - s.weight;
                return format!("layer {i} weight ({}, {})", r / s.inputs, r % s.inputs);
            }
            if k >= s.bias && k < s.bias + s.outputs {
                return format!("layer {i} bias {}", k - s.bias);
            }
        }
        format!("parameter {k}")
    }
}

/// Hash-encoded neural field: encoder tables and MLP weights in one flat
/// parameter vector laid out by [`ParamLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct InrModel {
    arch: Architecture,
    layout: ParamLayout,
    params: Vec<f64>,
}

impl InrModel {
    /// Table features uniform in `[-table_init, table_init]`, weights
    /// Glorot-uniform, biases zero.
    pub fn init(arch: Architecture, table_init: f64, seed: RngSeed) -> Result<Self> {
        arch.validate()?;
        let layout = ParamLayout::new(&arch);
        let mut params = vec![0.0; layout.len()];
        let mut rng = seed.rng();
        if table_init > 0.0 {
            for p in &mut params[..layout.encoder_len] {
                *p = rng.random_range(-table_init..=table_init);
            }
        }
        for s in &layout.layers {
            let limit = libm::sqrt(6.0 / (s.inputs + s.outputs) as f64);
            for p in &mut params[s.weight..s.bias] {
                *p = rng.random_range(-limit..=limit);
            }
        }
        Ok(InrModel { arch, layout, params })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        let layout = ParamLayout::new(&arch);
        if params.len() != layout.len() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                layout.len(),
                params.len()
            )));
        }
        Ok(InrModel { arch, layout, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn encoder_params(&self) -> &[f64] {
        &self.params[..self.layout.encoder_len]
    }

    pub fn mlp_params(&self) -> &[f64] {
        &self.params[self.layout.encoder_len..]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.params.iter().position(|p| !p.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFiniteParameter { location: self.layout.describe(k) }),
        }
    }

    /// Encoded features of one point.
    pub fn encode(&self, r: [f64; 2]) -> Vec<f64> {
        let plan = EncodingPlan::new(&[r], &self.arch.encoder);
        let mut out = vec![0.0; self.arch.encoder.output_dim()];
        self.encode_plan(&plan, 0..1, &mut out);
        out
    }

    /// Gather-and-interpolate for planned points `rows` into `out`
    /// (`rows.len() x (levels * features)`, row-major).
    pub(crate) fn encode_plan(&self, plan: &EncodingPlan, rows: Range<usize>, out: &mut [f64]) {
        let f = self.arch.encoder.features_per_level;
        let d = self.arch.encoder.output_dim();
        for (row, n) in out.chunks_exact_mut(d).zip(rows) {
            for (l, c) in plan.point(n).iter().enumerate() {
                let base = self.layout.tables[l];
                let slot = &mut row[l * f..(l + 1) * f];
                slot.fill(0.0);
                for k in 0..4 {
                    let w = c.weight[k];
                    let e = base + c.index[k] as usize * f;
                    for (s, p) in slot.iter_mut().zip(&self.params[e..e + f]) {
                        *s += w * p;
                    }
                }
            }
        }
    }

    /// MLP forward over a batch of encoded rows. Fills `acts[i]` with the
    /// post-activation output of layer `i` (`points x width`).
    pub(crate) fn mlp_forward(&self, input: &[f64], points: usize, acts: &mut [Vec<f64>]) {
        let last = self.layout.layers.len() - 1;
        for (i, s) in self.layout.layers.iter().enumerate() {
            let (prev, rest) = acts.split_at_mut(i);
            let x: &[f64] = if i == 0 { input } else { &prev[i - 1] };
            let out = &mut rest[0];
            out.resize(points * s.outputs, 0.0);
            for row in out.chunks_exact_mut(s.outputs) {
                row.copy_from_slice(&self.params[s.bias..s.bias + s.outputs]);
            }
            // out (points x outputs) += x (points x inputs) * W^T
            gemm::mul_abt(
                points,
                s.inputs,
                s.outputs,
                x,
                &self.params[s.weight..s.bias],
                1.0,
                out,
            );
            if i != last {
                for v in out.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// Field values at `coords`.
    pub fn forward(&self, coords: &[[f64; 2]]) -> Result<Vec<f64>> {
        self.check_finite()?;
        // bounded chunks keep scratch memory flat for large grids
        const CHUNK: usize = 512;
        let d = self.arch.encoder.output_dim();
        let mut out = Vec::with_capacity(coords.len());
        let mut enc = Vec::new();
        let mut acts = vec![Vec::new(); self.layout.layers.len()];
        for chunk in coords.chunks(CHUNK) {
            let plan = EncodingPlan::new(chunk, &self.arch.encoder);
            enc.resize(chunk.len() * d, 0.0);
            self.encode_plan(&plan, 0..chunk.len(), &mut enc);
            self.mlp_forward(&enc, chunk.len(), &mut acts);
            out.extend_from_slice(acts.last().unwrap());
        }
        Ok(out)
    }
}
