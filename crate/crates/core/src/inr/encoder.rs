//! Multiresolution hash-grid encoder.
//!
//! Level `l` lays a grid of resolution `N_l = floor(N_min * b^l)` over the
//! unit square (so `(N_l + 1)^2` vertices). Vertex features live in a table
//! of `min(2^T, (N_l + 1)^2)` entries: coarse levels index the vertex array
//! directly (row-major, `x` fastest), finer levels hash the vertex into the
//! table with `(x * 1) ^ (y * 2654435761) mod 2^T` in 32-bit wrapping
//! arithmetic. A point's encoding is the bilinear interpolation of its four
//! surrounding vertex features, concatenated over levels.

use alloc::vec::Vec;
use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hash multiplier for the second coordinate (the first uses 1).
pub const HASH_PRIME_Y: u32 = 2_654_435_761;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub levels: usize,
    pub features_per_level: usize,
    pub base_resolution: usize,
    /// Cross-level resolution growth factor `b > 1`.
    pub scale: f64,
    pub table_size_log2: u32,
    /// Encoding domain `[lo, hi]^2`; inputs outside are clamped onto it.
    pub domain: [f64; 2],
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            levels: 8,
            features_per_level: 2,
            base_resolution: 4,
            scale: 2.0,
            table_size_log2: 15,
            domain: [0.0, crate::data::SAMPLE_EXTENT],
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.features_per_level == 0 || self.base_resolution == 0 {
            return Err(Error::invalid("encoder levels, features and base resolution must be positive"));
        }
        if !(self.scale > 1.0) || !self.scale.is_finite() {
            return Err(Error::invalid(format!("encoder scale {} must be > 1", self.scale)));
        }
        if self.table_size_log2 == 0 || self.table_size_log2 > 30 {
            return Err(Error::invalid("table_size_log2 must be in 1..=30"));
        }
        if !(self.domain[0] < self.domain[1]) {
            return Err(Error::invalid("encoder domain must satisfy lo < hi"));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.levels * self.features_per_level
    }

    pub fn resolution(&self, level: usize) -> usize {
        let r = self.base_resolution as f64 * libm::pow(self.scale, level as f64);
        // guard exact products like 4 * 1.5^2 against 8.999...
        libm::floor(r + 1e-9) as usize
    }

    fn vertices(&self, level: usize) -> usize {
        let n = self.resolution(level) + 1;
        n * n
    }

    pub fn is_dense(&self, level: usize) -> bool {
        self.vertices(level) <= 1usize << self.table_size_log2
    }

    /// Feature vectors stored for `level`.
    pub fn table_entries(&self, level: usize) -> usize {
        self.vertices(level).min(1usize << self.table_size_log2)
    }

    /// Total encoder parameters across all levels.
    pub fn param_count(&self) -> usize {
        (0..self.levels).map(|l| self.table_entries(l) * self.features_per_level).sum()
    }
}

/// Table slot of grid vertex `cell = (x, y)` on `level`.
pub fn hash_index(cell: [u32; 2], level: usize, cfg: &EncoderConfig) -> usize {
    if cfg.is_dense(level) {
        let stride = cfg.resolution(level) + 1;
        cell[1] as usize * stride + cell[0] as usize
    } else {
        let h = cell[0] ^ cell[1].wrapping_mul(HASH_PRIME_Y);
        (h & ((1u32 << cfg.table_size_log2) - 1)) as usize
    }
}

/// Corner slots and bilinear weights of one point on one level.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Corners {
    pub index: [u32; 4],
    pub weight: [f64; 4],
}

/// Lookup of `r` on `level`: corners ordered (0,0), (1,0), (0,1), (1,1).
pub fn level_corners(r: [f64; 2], level: usize, cfg: &EncoderConfig) -> Corners {
    let [lo, hi] = cfg.domain;
    let n = cfg.resolution(level);
    let mut cell = [0u32; 2];
    let mut frac = [0.0f64; 2];
    for d in 0..2 {
        let u = ((r[d] - lo) / (hi - lo)).clamp(0.0, 1.0) * n as f64;
        let c = (libm::floor(u) as usize).min(n - 1);
        cell[d] = c as u32;
        frac[d] = u - c as f64;
    }
    let (fx, fy) = (frac[0], frac[1]);
    let idx = |dx: u32, dy: u32| hash_index([cell[0] + dx, cell[1] + dy], level, cfg) as u32;
    Corners {
        index: [idx(0, 0), idx(1, 0), idx(0, 1), idx(1, 1)],
        weight: [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy],
    }
}

/// Precomputed lookups for a fixed coordinate set (level-major per point).
#[derive(Debug, Clone)]
pub struct EncodingPlan {
    levels: usize,
    corners: Vec<Corners>,
}

impl EncodingPlan {
    pub fn new(coords: &[[f64; 2]], cfg: &EncoderConfig) -> Self {
        let mut corners = Vec::with_capacity(coords.len() * cfg.levels);
        for &r in coords {
            for l in 0..cfg.levels {
                corners.push(level_corners(r, l, cfg));
            }
        }
        EncodingPlan { levels: cfg.levels, corners }
    }

    pub fn len(&self) -> usize {
        self.corners.len() / self.levels
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn point(&self, n: usize) -> &[Corners] {
        &self.corners[n * self.levels..(n + 1) * self.levels]
    }
}
