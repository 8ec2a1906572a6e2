use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Search point: the two weight decays and the learning rate in log10,
/// the encoder scale factor `b` linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperVector {
    pub log10_lambda_enc: f64,
    pub log10_lambda_mlp: f64,
    pub log10_tau: f64,
    pub b: f64,
}

impl HyperVector {
    pub const DIM: usize = 4;

    pub fn lambda_enc(&self) -> f64 {
        libm::pow(10.0, self.log10_lambda_enc)
    }

    pub fn lambda_mlp(&self) -> f64 {
        libm::pow(10.0, self.log10_lambda_mlp)
    }

    pub fn tau(&self) -> f64 {
        libm::pow(10.0, self.log10_tau)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.log10_lambda_enc, self.log10_lambda_mlp, self.log10_tau, self.b]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        HyperVector { log10_lambda_enc: a[0], log10_lambda_mlp: a[1], log10_tau: a[2], b: a[3] }
    }
}

/// Box constraints in search coordinates (log10 for the first three).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperBounds {
    pub log10_lambda_enc: [f64; 2],
    pub log10_lambda_mlp: [f64; 2],
    pub log10_tau: [f64; 2],
    pub b: [f64; 2],
}

impl Default for HyperBounds {
    fn default() -> Self {
        HyperBounds {
            log10_lambda_enc: [-4.0, -1.0],
            log10_lambda_mlp: [-9.0, -6.0],
            log10_tau: [-4.0, -1.0],
            b: [1.2, 2.0],
        }
    }
}

impl HyperBounds {
    fn axes(&self) -> [[f64; 2]; 4] {
        [self.log10_lambda_enc, self.log10_lambda_mlp, self.log10_tau, self.b]
    }

    pub fn validate(&self) -> Result<()> {
        for [lo, hi] in self.axes() {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid("hyperparameter bounds must be finite with lo <= hi"));
            }
        }
        if self.b[0] <= 1.0 {
            return Err(Error::invalid("encoder scale lower bound must exceed 1"));
        }
        Ok(())
    }

    pub fn contains(&self, h: &HyperVector) -> bool {
        self.axes().iter().zip(h.to_array()).all(|([lo, hi], v)| *lo <= v && v <= *hi)
    }

    /// Map a point of the unit box onto the bounds.
    pub fn from_unit(&self, u: [f64; 4]) -> HyperVector {
        let mut a = [0.0; 4];
        for (k, [lo, hi]) in self.axes().into_iter().enumerate() {
            a[k] = lo + u[k].clamp(0.0, 1.0) * (hi - lo);
        }
        HyperVector::from_array(a)
    }

    /// Inverse of [`from_unit`](Self::from_unit); degenerate axes map to 0.5.
    pub fn to_unit(&self, h: &HyperVector) -> [f64; 4] {
        let v = h.to_array();
        let mut u = [0.0; 4];
        for (k, [lo, hi]) in self.axes().into_iter().enumerate() {
            u[k] = if hi > lo { ((v[k] - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

/// One evaluated hyperparameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub hyper: HyperVector,
    pub objective: f64,
    pub status: Status,
    pub seed: RngSeed,
    pub wall_time: f64,
}

impl SearchRecord {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}
