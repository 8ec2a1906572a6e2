//! Thin wrappers over `matrixmultiply::dgemm` for row-major buffers.
//!
//! Products with a unit dimension (the scalar output layer) skip the packed
//! kernel, which is slow for them.

fn scaled(c: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        0.0
    } else {
        beta * c
    }
}

/// `c (m x n) = a (m x k) * b^T + beta * c`, with `b` stored `n x k`.
pub(crate) fn mul_abt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    if n == 1 {
        for (ci, row) in c[..m].iter_mut().zip(a.chunks_exact(k)) {
            *ci = scaled(*ci, beta) + dot(row, &b[..k]);
        }
        return;
    }
    // SAFETY: the asserts above bound every access implied by the strides.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c (m x n) = a (m x k) * b (k x n) + beta * c`, all row-major.
pub(crate) fn mul_ab(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    if k == 1 {
        for (row, &ai) in c[..m * n].chunks_exact_mut(n).zip(a) {
            for (cij, bj) in row.iter_mut().zip(&b[..n]) {
                *cij = scaled(*cij, beta) + ai * bj;
            }
        }
        return;
    }
    // SAFETY: see `mul_abt`.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// `c (m x n) = a^T * b + beta * c`, with `a` stored `k x m` and `b` stored `k x n`.
pub(crate) fn mul_atb(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    assert!(a.len() >= k * m && b.len() >= k * n && c.len() >= m * n);
    if m == 1 {
        let c = &mut c[..n];
        for v in c.iter_mut() {
            *v = scaled(*v, beta);
        }
        for (&ai, row) in a[..k].iter().zip(b.chunks_exact(n)) {
            for (cj, bj) in c.iter_mut().zip(row) {
                *cj += ai * bj;
            }
        }
        return;
    }
    // SAFETY: see `mul_abt`.
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, 1.0,
            a.as_ptr(), 1, m as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}
