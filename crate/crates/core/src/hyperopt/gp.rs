//! Zero-mean Gaussian process with an anisotropic squared-exponential kernel.
//!
//! Inputs are expected in the unit box; targets are standardized before
//! fitting. Kernel hyperparameters (signal variance, per-dimension length
//! scales, noise variance) maximize the log marginal likelihood, searched by
//! multi-start Nelder-Mead in log space.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::simplex::nelder_mead;
use crate::error::{Error, Result};
use crate::linalg::DenseCholesky;
use crate::rng::RngSeed;

const LOG_SIGNAL: [f64; 2] = [-4.6, 4.6]; // ln 0.01 .. ln 100
const LOG_LENGTH: [f64; 2] = [-4.6, 1.6]; // ln 0.01 .. ln 5
const LOG_NOISE: [f64; 2] = [-13.8, -0.7]; // ln 1e-6 .. ln 0.5
const RANDOM_STARTS: usize = 4;

#[derive(Debug, Clone)]
pub struct GpSurrogate {
    dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    pub signal_var: f64,
    pub length_scales: Vec<f64>,
    pub noise_var: f64,
    /// Extra diagonal needed for a successful factorization.
    pub jitter: f64,
    /// All targets were equal: nothing to learn, predictions are flat.
    pub degenerate: bool,
    chol: DenseCholesky,
    alpha: Vec<f64>,
}

fn kernel(a: &[f64], b: &[f64], signal_var: f64, inv_len_sq: &[f64]) -> f64 {
    let mut d = 0.0;
    for k in 0..a.len() {
        let t = a[k] - b[k];
        d += t * t * inv_len_sq[k];
    }
    signal_var * libm::exp(-0.5 * d)
}

struct Factored {
    chol: DenseCholesky,
    alpha: Vec<f64>,
    jitter: f64,
}

fn factor(
    inputs: &[f64],
    dim: usize,
    y: &[f64],
    signal_var: f64,
    length_scales: &[f64],
    noise_var: f64,
) -> Result<Factored> {
    let n = y.len();
    let inv: Vec<f64> = length_scales.iter().map(|l| 1.0 / (l * l)).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(&inputs[i * dim..(i + 1) * dim], &inputs[j * dim..(j + 1) * dim], signal_var, &inv);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
        k[i * n + i] += noise_var;
    }
    let mut jitter = 0.0;
    loop {
        match DenseCholesky::factor(&k, n) {
            Ok(chol) => {
                let alpha = chol.solve(y);
                return Ok(Factored { chol, alpha, jitter });
            }
            Err(e) => {
                let next = if jitter == 0.0 { 1e-10 * signal_var.max(1e-12) } else { jitter * 10.0 };
                if next > signal_var.max(1.0) {
                    return Err(e);
                }
                for i in 0..n {
                    k[i * n + i] += next - jitter;
                }
                jitter = next;
            }
        }
    }
}

fn neg_log_marginal(inputs: &[f64], dim: usize, y: &[f64], theta: &[f64]) -> f64 {
    let signal = libm::exp(theta[0]);
    let lens: Vec<f64> = theta[1..1 + dim].iter().map(|t| libm::exp(*t)).collect();
    let noise = libm::exp(theta[1 + dim]);
    match factor(inputs, dim, y, signal, &lens, noise) {
        Ok(f) => {
            let fit: f64 = y.iter().zip(&f.alpha).map(|(a, b)| a * b).sum();
            0.5 * fit + 0.5 * f.chol.log_det() + 0.5 * y.len() as f64 * libm::log(2.0 * core::f64::consts::PI)
        }
        Err(_) => f64::INFINITY,
    }
}

/// Fit the surrogate to `inputs` (each of length `dim`) and raw `objectives`.
pub fn gp_fit(inputs: &[Vec<f64>], objectives: &[f64], seed: RngSeed) -> Result<GpSurrogate> {
    let n = objectives.len();
    if n < 2 || inputs.len() != n {
        return Err(Error::invalid("surrogate needs at least two observations"));
    }
    let dim = inputs[0].len();
    if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
        return Err(Error::invalid("surrogate inputs must share a positive dimension"));
    }
    if objectives.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("surrogate objectives must be finite"));
    }
    let flat: Vec<f64> = inputs.iter().flat_map(|x| x.iter().copied()).collect();
    let mean = objectives.iter().sum::<f64>() / n as f64;
    let var = objectives.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let std = libm::sqrt(var);
    let degenerate = !(std > 1e-12 * (1.0 + mean.abs()));

    let (y, y_std) = if degenerate {
        (vec![0.0; n], 1.0)
    } else {
        (objectives.iter().map(|v| (v - mean) / std).collect::<Vec<_>>(), std)
    };

    let (signal_var, length_scales, noise_var) = if degenerate {
        (1.0, vec![0.3; dim], 1e-6)
    } else {
        let mut lo = vec![LOG_SIGNAL[0]];
        let mut hi = vec![LOG_SIGNAL[1]];
        lo.extend(core::iter::repeat_n(LOG_LENGTH[0], dim));
        hi.extend(core::iter::repeat_n(LOG_LENGTH[1], dim));
        lo.push(LOG_NOISE[0]);
        hi.push(LOG_NOISE[1]);

        let mut starts = Vec::with_capacity(RANDOM_STARTS + 1);
        let mut first = vec![0.0];
        first.extend(core::iter::repeat_n(libm::log(0.3), dim));
        first.push(libm::log(1e-3));
        starts.push(first);
        let mut rng = seed.rng();
        for _ in 0..RANDOM_STARTS {
            starts.push((0..lo.len()).map(|k| rng.random_range(lo[k]..=hi[k])).collect());
        }

        let objective = |t: &[f64]| neg_log_marginal(&flat, dim, &y, t);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in &starts {
            let r = nelder_mead(objective, s, 0.7, &lo, &hi, 120 * (dim + 2));
            if best.as_ref().is_none_or(|(_, f)| r.f < *f) {
                best = Some((r.x, r.f));
            }
        }
        let (theta, _) = best.unwrap();
        (
            libm::exp(theta[0]),
            theta[1..1 + dim].iter().map(|t| libm::exp(*t)).collect(),
            libm::exp(theta[1 + dim]),
        )
    };

    let f = factor(&flat, dim, &y, signal_var, &length_scales, noise_var)?;
    Ok(GpSurrogate {
        dim,
        inputs: flat,
        targets: y,
        y_mean: mean,
        y_std,
        signal_var,
        length_scales,
        noise_var,
        jitter: f.jitter,
        degenerate,
        chol: f.chol,
        alpha: f.alpha,
    })
}

impl GpSurrogate {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Standardized training targets.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    /// Posterior mean and variance of the latent function at `x`, in
    /// standardized units.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let inv: Vec<f64> = self.length_scales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut kx: Vec<f64> = (0..self.len()).map(|i| kernel(x, self.input(i), self.signal_var, &inv)).collect();
        let mean: f64 = kx.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        self.chol.forward(&mut kx);
        let reduce: f64 = kx.iter().map(|v| v * v).sum();
        (mean, (self.signal_var - reduce).max(0.0))
    }

    /// Posterior mean and standard deviation in the original objective units.
    pub fn predict_raw(&self, x: &[f64]) -> (f64, f64) {
        let (m, v) = self.predict(x);
        (self.y_mean + self.y_std * m, self.y_std * libm::sqrt(v))
    }

    /// Standardize a raw objective value.
    pub fn standardize(&self, v: f64) -> f64 {
        (v - self.y_mean) / self.y_std
    }
}
