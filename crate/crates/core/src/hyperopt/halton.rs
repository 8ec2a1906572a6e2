//! Randomly shifted Halton points (Cranley-Patterson rotation).

use alloc::vec::Vec;

use rand::Rng;

use crate::rng::RngSeed;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// `n` points in `[0,1)^D`, shifted modulo 1 by a seeded random offset.
pub(crate) fn shifted_halton<const D: usize>(n: usize, seed: RngSeed) -> Vec<[f64; D]> {
    assert!(D <= PRIMES.len());
    let mut rng = seed.rng();
    let mut shift = [0.0; D];
    for s in &mut shift {
        *s = rng.random::<f64>();
    }
    (0..n)
        .map(|i| {
            let mut p = [0.0; D];
            for d in 0..D {
                let v = radical_inverse(i as u64 + 1, PRIMES[d]) + shift[d];
                p[d] = v - libm::floor(v);
            }
            p
        })
        .collect()
}
