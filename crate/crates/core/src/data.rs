//! Samples, evaluation grids, the rect target and the NRMSE metric.

use alloc::vec::Vec;
use alloc::format;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Side length of the square sampling domain `[0, SAMPLE_EXTENT]^2`.
pub const SAMPLE_EXTENT: f64 = 3.0;

/// Unit rect: 1 inside `|t| < 1/2`, 0 outside, 1/2 exactly on the edge.
pub fn rect(t: f64) -> f64 {
    let a = libm::fabs(t);
    if a < 0.5 {
        1.0
    } else if a == 0.5 {
        0.5
    } else {
        0.0
    }
}

/// Separable 2D rect centred at (3/2, 3/2): the indicator of `[1, 2]^2`.
pub fn rect2d(x: f64, y: f64) -> f64 {
    rect(x - 1.5) * rect(y - 1.5)
}

/// Index partition of a [`SampleSet`] into training and validation parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    coords: Vec<[f64; 2]>,
    values: Vec<f64>,
    split: Option<Split>,
}

impl SampleSet {
    pub fn new(coords: Vec<[f64; 2]>, values: Vec<f64>) -> Result<Self> {
        if coords.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} coordinates but {} values",
                coords.len(),
                values.len()
            )));
        }
        if coords.is_empty() {
            return Err(Error::invalid("sample set must not be empty"));
        }
        Ok(SampleSet { coords, values, split: None })
    }

    /// Attach a partition; it must cover every index exactly once with both
    /// parts nonempty.
    pub fn with_split(mut self, split: Split) -> Result<Self> {
        let n = self.len();
        if split.train.is_empty() || split.validation.is_empty() {
            return Err(Error::invalid("train and validation parts must both be nonempty"));
        }
        let mut seen = alloc::vec![false; n];
        for &i in split.train.iter().chain(split.validation.iter()) {
            if i >= n || seen[i] {
                return Err(Error::invalid(format!("split index {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::invalid("split does not cover every sample"));
        }
        self.split = Some(split);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn split(&self) -> Option<&Split> {
        self.split.as_ref()
    }

    /// New sample set holding the given indices (in order), without a split.
    pub fn subset(&self, indices: &[usize]) -> Result<SampleSet> {
        let coords = indices.iter().map(|&i| self.coords[i]).collect();
        let values = indices.iter().map(|&i| self.values[i]).collect();
        SampleSet::new(coords, values)
    }

    pub fn train_set(&self) -> Result<SampleSet> {
        let split = self.split.as_ref().ok_or(Error::MissingSplit)?;
        self.subset(&split.train)
    }

    pub fn validation_set(&self) -> Result<SampleSet> {
        let split = self.split.as_ref().ok_or(Error::MissingSplit)?;
        self.subset(&split.validation)
    }
}

/// Draw `n` points uniformly on `[0,3]^2` and evaluate `target` at each.
pub fn gen_samples<F>(n: usize, seed: RngSeed, target: F) -> Result<SampleSet>
where
    F: Fn(f64, f64) -> f64,
{
    if n == 0 {
        return Err(Error::invalid("number of samples must be at least 1"));
    }
    let mut rng = seed.rng();
    let coords: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * SAMPLE_EXTENT;
            let y = rng.random::<f64>() * SAMPLE_EXTENT;
            [x, y]
        })
        .collect();
    let values = coords.iter().map(|c| target(c[0], c[1])).collect();
    SampleSet::new(coords, values)
}

/// Random partition with `round(train_fraction * N)` training indices.
/// Both index lists are returned in ascending order.
pub fn split_samples(s: &SampleSet, train_fraction: f64, seed: RngSeed) -> Result<SampleSet> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let n = s.len();
    let n_train = libm::round(train_fraction * n as f64) as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::invalid(format!(
            "train fraction {train_fraction} of {n} samples leaves an empty partition"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng());
    let mut train = perm[..n_train].to_vec();
    let mut validation = perm[n_train..].to_vec();
    train.sort_unstable();
    validation.sort_unstable();
    let mut out = s.clone();
    out.split = None;
    out.with_split(Split { train, validation })
}

/// `||predicted - truth||_2 / ||truth||_2`.
pub fn nrmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions vs {} truth values",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::invalid("nrmse of empty vectors"));
    }
    let mut err = 0.0;
    let mut norm = 0.0;
    for (p, t) in predicted.iter().zip(truth) {
        let d = p - t;
        err += d * d;
        norm += t * t;
    }
    if norm <= 0.0 {
        return Err(Error::invalid("truth has zero norm"));
    }
    Ok(libm::sqrt(err) / libm::sqrt(norm))
}

/// Dense rectangular evaluation grid, row-major with `y` outer and `x` inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub n_x: usize,
    pub n_y: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Vec<f64>>,
}

impl EvalGrid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, n_x: usize, n_y: usize) -> Result<Self> {
        let g = EvalGrid { x_min, x_max, y_min, y_max, n_x, n_y, truth: None };
        g.validate()?;
        Ok(g)
    }

    /// Square grid `[lo, hi]^2` with `n` points per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        EvalGrid::new(lo, hi, lo, hi, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(Error::invalid("grid extent must be finite with min < max"));
        }
        if self.n_x < 2 || self.n_y < 2 {
            return Err(Error::invalid("grid needs at least 2 points per axis"));
        }
        if let Some(t) = &self.truth {
            if t.len() != self.len() {
                return Err(Error::invalid(format!(
                    "truth has {} values, grid has {} points",
                    t.len(),
                    self.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_at(&self, j: usize) -> f64 {
        axis_point(self.x_min, self.x_max, self.n_x, j)
    }

    pub fn y_at(&self, i: usize) -> f64 {
        axis_point(self.y_min, self.y_max, self.n_y, i)
    }

    /// Evaluate `f` at every grid point and store it as the truth.
    pub fn with_truth<F: Fn(f64, f64) -> f64>(mut self, f: F) -> Self {
        let truth = eval_grid_coords(&self).into_iter().map(|c| f(c[0], c[1])).collect();
        self.truth = Some(truth);
        self
    }

    pub fn truth(&self) -> Result<&[f64]> {
        self.truth.as_deref().ok_or(Error::MissingTruth)
    }

    /// Index of the grid row whose `y` is closest to `y` (lower row on ties).
    pub fn nearest_row(&self, y: f64) -> usize {
        let step = (self.y_max - self.y_min) / (self.n_y - 1) as f64;
        let r = libm::round((y - self.y_min) / step);
        let mut best = if r <= 0.0 { 0 } else { (r as usize).min(self.n_y - 1) };
        // round() may land one row off near half-steps; settle by distance.
        for cand in [best.saturating_sub(1), (best + 1).min(self.n_y - 1)] {
            if libm::fabs(self.y_at(cand) - y) < libm::fabs(self.y_at(best) - y) {
                best = cand;
            }
        }
        best
    }
}

fn axis_point(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if k + 1 == n {
        hi
    } else {
        lo + k as f64 * (hi - lo) / (n - 1) as f64
    }
}

/// Row-major list of grid coordinates (`y` outer, `x` inner).
pub fn eval_grid_coords(g: &EvalGrid) -> Vec<[f64; 2]> {
    let xs: Vec<f64> = (0..g.n_x).map(|j| g.x_at(j)).collect();
    let mut out = Vec::with_capacity(g.len());
    for i in 0..g.n_y {
        let y = g.y_at(i);
        out.extend(xs.iter().map(|&x| [x, y]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_values() {
        assert_eq!(rect2d(1.5, 1.5), 1.0);
        assert_eq!(rect2d(0.0, 0.0), 0.0);
        assert_eq!(rect2d(1.0, 1.5), 0.5);
        assert_eq!(rect2d(1.0, 2.0), 0.25);
        assert_eq!(rect2d(2.5, 1.5), 0.0);
    }

    #[test]
    fn samples_in_domain_and_deterministic() {
        let s = gen_samples(10_000, RngSeed(7), rect2d).unwrap();
        assert_eq!(s.len(), 10_000);
        for (c, v) in s.coords().iter().zip(s.values()) {
            assert!((0.0..=3.0).contains(&c[0]) && (0.0..=3.0).contains(&c[1]));
            assert!(*v == 0.0 || *v == 0.5 || *v == 1.0);
        }
        let t = gen_samples(10_000, RngSeed(7), rect2d).unwrap();
        assert_eq!(s, t);
        assert_eq!(gen_samples(1, RngSeed(3), rect2d).unwrap().len(), 1);
        assert!(gen_samples(0, RngSeed(3), rect2d).is_err());
    }

    #[test]
    fn split_sizes() {
        let s = gen_samples(10_000, RngSeed(1), rect2d).unwrap();
        let sp = split_samples(&s, 0.8, RngSeed(2)).unwrap();
        let p = sp.split().unwrap();
        assert_eq!(p.train.len(), 8000);
        assert_eq!(p.validation.len(), 2000);

        let two = gen_samples(2, RngSeed(1), rect2d).unwrap();
        let sp = split_samples(&two, 0.5, RngSeed(9)).unwrap();
        assert_eq!(sp.split().unwrap().train.len(), 1);
        assert_eq!(sp.split().unwrap().validation.len(), 1);

        let ten = gen_samples(10, RngSeed(1), rect2d).unwrap();
        assert!(split_samples(&ten, 0.999, RngSeed(9)).is_err());
        assert!(split_samples(&ten, 0.01, RngSeed(9)).is_err());
    }

    #[test]
    fn nrmse_examples() {
        let t = [1.0, 0.0, 0.5, 2.0];
        assert_eq!(nrmse(&t, &t).unwrap(), 0.0);
        assert!((nrmse(&[0.0; 4], &t).unwrap() - 1.0).abs() < 1e-15);
        let twice: Vec<f64> = t.iter().map(|v| 2.0 * v).collect();
        assert!((nrmse(&twice, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(nrmse(&[1.0], &[0.0]).is_err());
        assert!(nrmse(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn grid_coordinates() {
        let g = EvalGrid::square(-0.3, 3.3, 501).unwrap();
        let c = eval_grid_coords(&g);
        assert_eq!(c.len(), 251_001);
        assert_eq!(c[0], [-0.3, -0.3]);
        assert_eq!(c[c.len() - 1], [3.3, 3.3]);

        let u = EvalGrid::square(0.0, 1.0, 2).unwrap();
        assert_eq!(eval_grid_coords(&u), alloc::vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);

        let g3 = EvalGrid::new(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap();
        let xs: Vec<f64> = eval_grid_coords(&g3).iter().take(3).map(|c| c[0]).collect();
        assert_eq!(xs, alloc::vec![0.0, 0.5, 1.0]);

        assert!(EvalGrid::square(1.0, 0.0, 5).is_err());
        assert!(EvalGrid::square(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn nearest_row_to_cross_section() {
        let g = EvalGrid::square(-0.3, 3.3, 501).unwrap();
        let r = g.nearest_row(1.5);
        assert_eq!(r, 250);
        assert!((g.y_at(r) - 1.5).abs() < 1e-12);
        assert_eq!(g.nearest_row(-10.0), 0);
        assert_eq!(g.nearest_row(10.0), 500);
    }
}
