#![allow(dead_code)]

use std::f64::consts::PI;

use fbmc_core::Complex64;
use nalgebra::DMatrix;

/// P built entry by entry from o[t] = Σ_m w[t − mN] b_m[(t − mN) mod N].
pub fn dense_p(w: &[f64], n: usize, m: usize) -> DMatrix<f64> {
    let k = w.len() / n;
    let rows = (m + k - 1) * n;
    DMatrix::from_fn(rows, m * n, |t, col| {
        let (sym, j) = (col / n, col % n);
        let start = sym * n;
        if t >= start && t - start < k * n && (t - start) % n == j {
            w[t - start]
        } else {
            0.0
        }
    })
}

/// Unitary N-point DFT matrix.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |a, b| Complex64::from_polar(s, -2.0 * PI * (a * b) as f64 / n as f64))
}

pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    let f = dft_matrix(n);
    (0..n).map(|a| (0..n).map(|b| f[(a, b)] * x[b]).sum()).collect()
}

pub fn complexify(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Block (i, j) of size N×N.
pub fn block(a: &DMatrix<f64>, n: usize, i: usize, j: usize) -> DMatrix<f64> {
    a.view((i * n, j * n), (n, n)).into_owned()
}

/// Full linear convolution of x and h.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); x.len() + h.len() - 1];
    for (i, xv) in x.iter().enumerate() {
        for (j, hv) in h.iter().enumerate() {
            out[i + j] += xv * hv;
        }
    }
    out
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Positive random taps from a fixed seed.
pub fn test_taps(len: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(0.2..1.2)).collect()
}
