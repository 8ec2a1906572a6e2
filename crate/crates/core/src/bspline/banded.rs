use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Symmetric banded matrix storing the lower band row by row.
///
/// Row `i` holds columns `i - p ..= i` at offsets `0 ..= p` (offset
/// `c + p - i`); slots left of column 0 stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSpd {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        let p = half_bandwidth.min(n.saturating_sub(1));
        BandedSpd { n, p, data: vec![0.0; n * (p + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.p
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.p);
        i * (self.p + 1) + (j + self.p - i)
    }

    /// Entry `(i, j)` for either triangle; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.p {
            0.0
        } else {
            self.data[self.slot(r, c)]
        }
    }

    /// Add `v` to `(i, j)` with `j <= i`.
    #[inline]
    pub fn add_lower(&mut self, i: usize, j: usize, v: f64) {
        assert!(i - j <= self.p, "entry ({i}, {j}) outside band {}", self.p);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += v;
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.p);
            for j in lo..i {
                let a = self.data[self.slot(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.slot(i, i)] * x[i];
        }
        y
    }

    /// Banded Cholesky factorization `A = L L^T`, consuming the matrix.
    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let n = self.n;
        let p = self.p;
        let w = p + 1;
        for i in 0..n {
            let lo = i.saturating_sub(p);
            let (head, tail) = self.data.split_at_mut(i * w);
            let row_i = &mut tail[..w];
            // offset of column `lo` within row i
            let oi = lo + p - i;
            for j in lo..=i {
                let len = j - lo;
                if j == i {
                    let s = row_i[oi + len] - dot(&row_i[oi..oi + len], &row_i[oi..oi + len]);
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Singular { pivot: i, value: s });
                    }
                    row_i[oi + len] = libm::sqrt(s);
                } else {
                    let row_j = &head[j * w..(j + 1) * w];
                    let oj = lo + p - j;
                    let s = row_i[oi + len] - dot(&row_i[oi..oi + len], &row_j[oj..oj + len]);
                    row_i[oi + len] = s / row_j[p];
                }
            }
        }
        Ok(BandedCholesky { n, p, data: self.data })
    }
}

/// Lower-triangular banded Cholesky factor in the [`BandedSpd`] layout.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let p = self.p;
        let w = p + 1;
        // L z = b
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            let row = &self.data[i * w + (lo + p - i)..(i + 1) * w];
            let len = i - lo;
            let s = b[i] - dot(&row[..len], &b[lo..i]);
            b[i] = s / row[len];
        }
        // L^T x = z, column sweep over stored rows
        for i in (0..self.n).rev() {
            let lo = i.saturating_sub(p);
            let row = &self.data[i * w + (lo + p - i)..(i + 1) * w];
            let len = i - lo;
            let xi = b[i] / row[len];
            b[i] = xi;
            for (bk, l) in b[lo..i].iter_mut().zip(&row[..len]) {
                *bk -= l * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}
