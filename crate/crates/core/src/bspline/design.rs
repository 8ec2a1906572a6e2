use alloc::vec;
use alloc::vec::Vec;

use super::{BandedSpd, SplineConfig};
use crate::data::SampleSet;

/// Sparse design matrix in CSR form: at most 16 nonzeros per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    config: SplineConfig,
}

/// Rows of basis values at the sample coordinates.
pub fn build_design_matrix(s: &SampleSet, cfg: &SplineConfig) -> DesignMatrix {
    DesignMatrix::from_coords(s.coords(), cfg)
}

impl DesignMatrix {
    pub fn from_coords(coords: &[[f64; 2]], cfg: &SplineConfig) -> Self {
        let nb = cfg.n_basis();
        let mut row_ptr = Vec::with_capacity(coords.len() + 1);
        let mut cols = Vec::with_capacity(coords.len() * 16);
        let mut vals = Vec::with_capacity(coords.len() * 16);
        row_ptr.push(0);
        for c in coords {
            let (ix, vx, nx) = cfg.axis_support(c[0]);
            let (iy, vy, ny) = cfg.axis_support(c[1]);
            for a in 0..nx {
                for b in 0..ny {
                    cols.push(ix[a] * nb + iy[b]);
                    vals.push(vx[a] * vy[b]);
                }
            }
            row_ptr.push(cols.len());
        }
        DesignMatrix { n_cols: cfg.n_coeffs(), row_ptr, cols, vals, config: *cfg }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn config(&self) -> &SplineConfig {
        &self.config
    }

    /// `(column, value)` pairs of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn mul_vec(&self, c: &[f64]) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.row(r).map(|(j, v)| v * c[j]).sum()).collect()
    }

    /// `Phi^T y`.
    pub fn transpose_mul(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n_rows());
        let mut out = vec![0.0; self.n_cols];
        for (r, &yr) in y.iter().enumerate() {
            for (j, v) in self.row(r) {
                out[j] += v * yr;
            }
        }
        out
    }

    /// `Phi^T Phi` in banded storage.
    pub fn gram(&self) -> BandedSpd {
        let mut g = BandedSpd::zeros(self.n_cols, self.config.gram_half_bandwidth());
        for r in 0..self.n_rows() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let cols = &self.cols[a..b];
            let vals = &self.vals[a..b];
            for u in 0..cols.len() {
                for w in 0..cols.len() {
                    if cols[w] <= cols[u] {
                        g.add_lower(cols[u], cols[w], vals[u] * vals[w]);
                    }
                }
            }
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bspline::cubic_kernel;
    use crate::data::SampleSet;

    fn cfg() -> SplineConfig {
        SplineConfig::on_unit_experiment(12).unwrap()
    }

    #[test]
    fn sample_on_center_gets_peak_value() {
        let c = cfg();
        let s = SampleSet::new(alloc::vec![[c.center(5), c.center(7)]], alloc::vec![0.0]).unwrap();
        let phi = build_design_matrix(&s, &c);
        let v = phi.row(0).find(|(j, _)| *j == 5 * c.n_basis() + 7).unwrap().1;
        assert!((v - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn interior_row_sum_matches_full_summation() {
        let c = cfg();
        let pts = [[1.234, 0.777], [2.5, 2.5], [0.5001, 1.9999]];
        let s = SampleSet::new(pts.to_vec(), alloc::vec![0.0; 3]).unwrap();
        let phi = build_design_matrix(&s, &c);
        let d = c.spacing();
        for (r, p) in pts.iter().enumerate() {
            // brute force: every basis function
            let mut full = 0.0;
            for i in 0..c.n_basis() {
                for j in 0..c.n_basis() {
                    full += cubic_kernel((p[0] - c.center(i)) / d) * cubic_kernel((p[1] - c.center(j)) / d);
                }
            }
            let sparse: f64 = phi.row(r).map(|(_, v)| v).sum();
            assert!((sparse - full).abs() < 1e-12);
            assert!((sparse - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_row_is_small_and_nonnegative() {
        let c = cfg();
        let s = SampleSet::new(alloc::vec![[0.0, 0.0]], alloc::vec![1.0]).unwrap();
        let phi = build_design_matrix(&s, &c);
        let entries: Vec<_> = phi.row(0).collect();
        assert!(entries.len() <= 16);
        assert!(entries.iter().all(|(_, v)| *v >= 0.0 && *v <= 4.0 / 9.0 + 1e-15));
    }

    #[test]
    fn gram_matches_explicit_product() {
        let c = SplineConfig::on_unit_experiment(4).unwrap();
        let s = crate::data::gen_samples(30, crate::RngSeed(3), crate::rect2d).unwrap();
        let phi = build_design_matrix(&s, &c);
        let g = phi.gram();
        let n = c.n_coeffs();
        let mut dense = alloc::vec![0.0; n * n];
        for r in 0..phi.n_rows() {
            for (a, va) in phi.row(r) {
                for (b, vb) in phi.row(r) {
                    dense[a * n + b] += va * vb;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                assert!((g.get(a, b) - dense[a * n + b]).abs() < 1e-14);
            }
        }
    }
}
