//! Rate-1/2, constraint-length-7 convolutional code (generators 133, 171
//! octal) with a 64-state Viterbi decoder.

use crate::error::{Error, Result};

pub const CONSTRAINT_LENGTH: usize = 7;
pub const GENERATORS: [u32; 2] = [0o133, 0o171];
const MEMORY: usize = CONSTRAINT_LENGTH - 1;
const STATES: usize = 1 << MEMORY;

/// Coded length for `info` message bits, including the 6 flush bits.
pub fn coded_len(info: usize) -> usize {
    2 * (info + MEMORY)
}

/// Largest message that fits in `coded` coded bits.
pub fn info_len(coded: usize) -> usize {
    (coded / 2).saturating_sub(MEMORY)
}

#[inline]
fn outputs(reg: u32) -> (u8, u8) {
    (
        ((reg & GENERATORS[0]).count_ones() & 1) as u8,
        ((reg & GENERATORS[1]).count_ones() & 1) as u8,
    )
}

/// Zero-terminated encoding; output length 2·(len + 6).
pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(coded_len(bits.len()));
    let mut reg = 0u32;
    for b in bits.iter().copied().chain(std::iter::repeat_n(0, MEMORY)) {
        reg = (reg >> 1) | (((b & 1) as u32) << MEMORY);
        let (a, c) = outputs(reg);
        out.push(a);
        out.push(c);
    }
    out
}

/// Decoder input: hard bits or log-likelihood ratios log P(0)/P(1).
#[derive(Debug, Clone, Copy)]
pub enum DecoderInput<'a> {
    Hard(&'a [u8]),
    Soft(&'a [f64]),
}

impl DecoderInput<'_> {
    fn len(&self) -> usize {
        match self {
            DecoderInput::Hard(b) => b.len(),
            DecoderInput::Soft(l) => l.len(),
        }
    }

    /// Cost of hypothesising coded bit `c` at position `i`.
    #[inline]
    fn cost(&self, i: usize, c: u8) -> f64 {
        match self {
            DecoderInput::Hard(b) => ((b[i] & 1) != c) as u8 as f64,
            DecoderInput::Soft(l) => {
                if c == 1 {
                    l[i]
                } else {
                    -l[i]
                }
            }
        }
    }
}

/// Maximum-likelihood decoding over the zero-terminated trellis.
pub fn viterbi_decode(input: DecoderInput<'_>) -> Result<Vec<u8>> {
    let len = input.len();
    if !len.is_multiple_of(2) || len < 2 * (MEMORY + 1) {
        return Err(Error::CodedLength(len));
    }
    let steps = len / 2;
    let mut metric = vec![f64::INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = vec![0.0; STATES];
    // For each step and next state: the predecessor state.
    let mut back = vec![0u8; steps * STATES];

    let mut branch = [[0.0f64; 2]; 2];
    for t in 0..steps {
        for (a, row) in branch.iter_mut().enumerate() {
            for (c, slot) in row.iter_mut().enumerate() {
                *slot = input.cost(2 * t, a as u8) + input.cost(2 * t + 1, c as u8);
            }
        }
        next.iter_mut().for_each(|v| *v = f64::INFINITY);
        for (s, &ms) in metric.iter().enumerate() {
            if ms == f64::INFINITY {
                continue;
            }
            for b in 0..2u32 {
                let reg = (b << MEMORY) | s as u32;
                let ns = (reg >> 1) as usize;
                let (a, c) = outputs(reg);
                let cand = ms + branch[a as usize][c as usize];
                if cand < next[ns] {
                    next[ns] = cand;
                    back[t * STATES + ns] = s as u8;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (state >> (MEMORY - 1)) as u8 & 1;
        state = back[t * STATES + state] as usize;
    }
    bits.truncate(steps - MEMORY);
    Ok(bits)
}

pub fn viterbi_decode_hard(bits: &[u8]) -> Result<Vec<u8>> {
    viterbi_decode(DecoderInput::Hard(bits))
}

pub fn viterbi_decode_soft(llrs: &[f64]) -> Result<Vec<u8>> {
    viterbi_decode(DecoderInput::Soft(llrs))
}
