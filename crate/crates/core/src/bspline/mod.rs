//! Tensor-product cubic B-spline fitting with a ridge penalty.
//!
//! A spline with `m` knots per axis on `[lo, hi]` has spacing
//! `delta = (hi - lo) / (m - 1)` and `m + 2` basis centres per axis at
//! `lo + (k - 1) * delta` for `k = 0..m+2`: the `m` knots plus one exterior
//! centre on each side. Coefficients are flattened row-major over
//! `(x index, y index)`.

mod banded;
mod design;
mod search;


pub use banded::{BandedCholesky, BandedSpd};
pub use design::{build_design_matrix, DesignMatrix};
pub use search::{oracle_grid_search, ridge_fit, GridCell, OracleSearch, RidgeProblem};

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Centred cardinal cubic B-spline, supported on `[-2, 2]`.
pub fn cubic_kernel(x: f64) -> f64 {
    let a = libm::fabs(x);
    if a <= 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a <= 2.0 {
        let t = 2.0 - a;
        t * t * t / 6.0
    } else {
        0.0
    }
}

/// Placement of the `m` knots on `[lo, hi]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnotConvention {
    /// Knots at both endpoints: `delta = (hi - lo) / (m - 1)`, centres
    /// `lo + (k - 1) * delta`.
    Endpoint,
    /// Knots at the midpoints of `m` equal cells: `delta = (hi - lo) / m`,
    /// centres `lo + (k - 1/2) * delta`.
    #[default]
    CellCentered,
}

/// Knot domain and placement shared by every `m` in a sweep. The default is
/// cell-centred knots on the sampling square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineSpace {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub convention: KnotConvention,
}

impl Default for SplineSpace {
    fn default() -> Self {
        SplineSpace { lo: 0.0, hi: crate::data::SAMPLE_EXTENT, convention: KnotConvention::CellCentered }
    }
}

impl SplineSpace {
    pub fn config(&self, m: usize) -> Result<SplineConfig> {
        Ok(SplineConfig::new(m, self.lo, self.hi)?.with_convention(self.convention))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplineConfig {
    pub m: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub convention: KnotConvention,
}

impl SplineConfig {
    pub fn new(m: usize, lo: f64, hi: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid("spline needs at least 2 knots per axis"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("spline domain must satisfy lo < hi"));
        }
        Ok(SplineConfig { m, lo, hi, convention: KnotConvention::default() })
    }

    pub fn with_convention(mut self, convention: KnotConvention) -> Self {
        self.convention = convention;
        self
    }

    /// `m` knots in the default [`SplineSpace`].
    pub fn on_unit_experiment(m: usize) -> Result<Self> {
        SplineSpace::default().config(m)
    }

    pub fn spacing(&self) -> f64 {
        match self.convention {
            KnotConvention::Endpoint => (self.hi - self.lo) / (self.m - 1) as f64,
            KnotConvention::CellCentered => (self.hi - self.lo) / self.m as f64,
        }
    }

    /// Position of centre 1 (the first knot) in units of the spacing.
    fn first_knot_offset(&self) -> f64 {
        match self.convention {
            KnotConvention::Endpoint => 0.0,
            KnotConvention::CellCentered => 0.5,
        }
    }

    /// Basis functions per axis.
    pub fn n_basis(&self) -> usize {
        self.m + 2
    }

    pub fn n_coeffs(&self) -> usize {
        self.n_basis() * self.n_basis()
    }

    /// Centre of basis function `k` (zero-based, `0..m+2`).
    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 - 1.0 + self.first_knot_offset()) * self.spacing()
    }

    /// Half-bandwidth of the Gram matrix under row-major coefficient order.
    pub fn gram_half_bandwidth(&self) -> usize {
        3 * self.n_basis() + 3
    }

    /// The up-to-four basis indices overlapping coordinate `x` on one axis,
    /// with their kernel values. Returns the number of valid entries.
    pub(crate) fn axis_support(&self, x: f64) -> ([usize; 4], [f64; 4], usize) {
        let delta = self.spacing();
        let t = (x - self.lo) / delta + 1.0 - self.first_knot_offset();
        let base = libm::floor(t) as i64 - 1;
        let mut idx = [0usize; 4];
        let mut val = [0.0f64; 4];
        let mut n = 0;
        let nb = self.n_basis() as i64;
        for k in base..base + 4 {
            if k < 0 || k >= nb {
                continue;
            }
            let w = cubic_kernel(t - k as f64);
            if w != 0.0 {
                idx[n] = k as usize;
                val[n] = w;
                n += 1;
            }
        }
        (idx, val, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineModel {
    pub config: SplineConfig,
    pub coeffs: Vec<f64>,
}

impl SplineModel {
    pub fn new(config: SplineConfig, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != config.n_coeffs() {
            return Err(Error::invalid("coefficient count does not match (m+2)^2"));
        }
        Ok(SplineModel { config, coeffs })
    }

    pub fn zeros(config: SplineConfig) -> Self {
        SplineModel { coeffs: vec![0.0; config.n_coeffs()], config }
    }

    pub fn eval_point(&self, x: f64, y: f64) -> f64 {
        let nb = self.config.n_basis();
        let (ix, vx, nx) = self.config.axis_support(x);
        let (iy, vy, ny) = self.config.axis_support(y);
        let mut s = 0.0;
        for a in 0..nx {
            let row = ix[a] * nb;
            let mut inner = 0.0;
            for b in 0..ny {
                inner += self.coeffs[row + iy[b]] * vy[b];
            }
            s += vx[a] * inner;
        }
        s
    }
}

/// Evaluate the spline at each coordinate.
pub fn eval_spline(model: &SplineModel, coords: &[[f64; 2]]) -> Vec<f64> {
    coords.iter().map(|c| model.eval_point(c[0], c[1])).collect()
}
