//! Unitary (power-normalized) N-point DFT and block IDFT.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{check_len, Result};
use crate::qam::QamBlock;

/// Forward/inverse transform pair scaled by 1/√N so that F·Fᴴ = I.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            scale: 1.0 / (n as f64).sqrt(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place unitary forward transform of every consecutive N-segment.
    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// In-place unitary inverse transform of every consecutive N-segment.
    pub fn inverse_inplace(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
    }

    /// y = F x for a single length-N segment.
    pub fn dft_segment(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, x.len())?;
        let mut out = x.to_vec();
        self.forward_inplace(&mut out);
        Ok(out)
    }

    /// b = [Fᴴ s_0; …; Fᴴ s_{M−1}].
    pub fn idft_block(&self, block: &QamBlock) -> Result<Vec<Complex64>> {
        check_len(self.n, block.subcarriers())?;
        let mut out = block.as_slice().to_vec();
        self.inverse_inplace(&mut out);
        Ok(out)
    }
}

/// Convenience wrapper: unitary DFT of one segment without keeping a plan.
pub fn dft_segment(x: &[Complex64]) -> Vec<Complex64> {
    let dft = Dft::new(x.len());
    let mut out = x.to_vec();
    dft.forward_inplace(&mut out);
    out
}

/// Convenience wrapper for [`Dft::idft_block`].
pub fn idft_block(block: &QamBlock) -> Vec<Complex64> {
    let dft = Dft::new(block.subcarriers());
    let mut out = block.as_slice().to_vec();
    dft.inverse_inplace(&mut out);
    out
}
