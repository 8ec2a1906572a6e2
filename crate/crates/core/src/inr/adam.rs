use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First/second moment estimates and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Bias-corrected Adam update of `params` with gradient `grad`.
    /// Any weight decay must already be folded into `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64, cfg: &AdamConfig) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 / (1.0 - libm::pow(b1, self.t as f64));
        let c2 = 1.0 / (1.0 - libm::pow(b2, self.t as f64));
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let step = lr * (*m * c1) / (libm::sqrt(*v * c2) + cfg.eps);
            *p -= step;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![0.3, -1.2];
        let mut s = AdamState::new(2);
        s.step(&mut p, &[0.0, 0.0], 0.1, &AdamConfig::default());
        assert_eq!(p, vec![0.3, -1.2]);
    }

    #[test]
    fn constant_gradient_steps_approach_learning_rate() {
        // closed form: m_hat = v_hat^(1/2) = |g| for constant g, so each step
        // is lr * |g| / (|g| + eps)
        let cfg = AdamConfig::default();
        let lr = 0.01;
        let g = 0.37;
        let mut s = AdamState::new(1);
        let mut p = [0.0];
        let mut prev = 0.0;
        for t in 1..=500 {
            s.step(&mut p, &[g], lr, &cfg);
            let step = prev - p[0];
            let expected = lr * g / (g + cfg.eps);
            assert!((step - expected).abs() < 1e-12, "step {t}: {step} vs {expected}");
            prev = p[0];
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut p = vec![1.0, 2.0, 3.0];
            let mut s = AdamState::new(3);
            for k in 0..10 {
                let g: Vec<f64> = p.iter().map(|x| x * 0.5 - k as f64 * 0.01).collect();
                s.step(&mut p, &g, 0.05, &AdamConfig::default());
            }
            p
        };
        assert_eq!(run(), run());
    }
}
