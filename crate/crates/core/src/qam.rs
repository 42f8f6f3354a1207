//! Gray-coded square QAM and the N×M symbol block container.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::system::ModOrder;

/// N×M block of QAM symbols, stored symbol-major: entry (n, m) lives at
/// `m·N + n`, so column m is the contiguous slice s_m.
#[derive(Debug, Clone, PartialEq)]
pub struct QamBlock {
    n: usize,
    m: usize,
    data: Vec<Complex64>,
}

impl QamBlock {
    pub fn zeros(subcarriers: usize, symbols: usize) -> Self {
        Self {
            n: subcarriers,
            m: symbols,
            data: vec![Complex64::default(); subcarriers * symbols],
        }
    }

    pub fn from_vec(subcarriers: usize, symbols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_len(subcarriers * symbols, data.len())?;
        Ok(Self { n: subcarriers, m: symbols, data })
    }

    pub fn subcarriers(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> usize {
        self.m
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[m * self.n + n]
    }

    pub fn set(&mut self, n: usize, m: usize, v: Complex64) {
        self.data[m * self.n + n] = v;
    }

    /// The N-vector s_m.
    pub fn symbol(&self, m: usize) -> &[Complex64] {
        &self.data[m * self.n..(m + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }
}

/// Square Gray-coded constellation scaled to mean power δ².
#[derive(Debug, Clone)]
pub struct Constellation {
    order: ModOrder,
    /// Points indexed by bit label.
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(order: ModOrder, symbol_power: f64) -> Self {
        let bits = order.bits_per_symbol();
        let half = bits / 2;
        let side = 1usize << half;
        // Level index i (most positive first) carries Gray label i ^ (i >> 1).
        let mut amp_of_label = vec![0.0; side];
        for i in 0..side {
            amp_of_label[i ^ (i >> 1)] = (side as f64 - 1.0) - 2.0 * i as f64;
        }
        let raw_power = 2.0 * (side * side - 1) as f64 / 3.0;
        let scale = (symbol_power / raw_power).sqrt();
        let points = (0..order.order())
            .map(|label| {
                let re = amp_of_label[label >> half];
                let im = amp_of_label[label & (side - 1)];
                Complex64::new(re, im) * scale
            })
            .collect();
        Self { order, points }
    }

    pub fn order(&self) -> ModOrder {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.bits_per_symbol()
    }

    /// Constellation points indexed by bit label (MSB first).
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let q = self.bits_per_symbol();
        if !bits.len().is_multiple_of(q) {
            return Err(Error::BitAlignment { bits: bits.len(), per_symbol: q });
        }
        Ok(bits
            .chunks(q)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, b| (acc << 1) | (*b as usize & 1));
                self.points[label]
            })
            .collect())
    }

    /// Hard-decision nearest-point demapping; ties go to the lower label.
    pub fn demap(&self, symbols: &[Complex64]) -> Vec<u8> {
        let q = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * q);
        for s in symbols {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (label, p) in self.points.iter().enumerate() {
                let d = (s - p).norm_sqr();
                if d < best_d {
                    best_d = d;
                    best = label;
                }
            }
            out.extend((0..q).rev().map(|b| ((best >> b) & 1) as u8));
        }
        out
    }

    /// Max-log LLRs, log P(b=0)/P(b=1), given per-symbol noise variances.
    pub fn llr(&self, symbols: &[Complex64], variances: &[f64]) -> Vec<f64> {
        let q = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * q);
        for (s, var) in symbols.iter().zip(variances) {
            let var = var.max(1e-300);
            for b in (0..q).rev() {
                let mut d0 = f64::INFINITY;
                let mut d1 = f64::INFINITY;
                for (label, p) in self.points.iter().enumerate() {
                    let d = (s - p).norm_sqr();
                    if (label >> b) & 1 == 0 {
                        d0 = d0.min(d);
                    } else {
                        d1 = d1.min(d);
                    }
                }
                out.push((d1 - d0) / var);
            }
        }
        out
    }
}

/// Maps bits onto a constellation of the given order and mean power.
pub fn qam_map(bits: &[u8], order: ModOrder, symbol_power: f64) -> Result<Vec<Complex64>> {
    Constellation::new(order, symbol_power).map(bits)
}

/// Hard-decision demapper counterpart of [`qam_map`].
pub fn qam_demap(symbols: &[Complex64], order: ModOrder, symbol_power: f64) -> Vec<u8> {
    Constellation::new(order, symbol_power).demap(symbols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ORDERS: [ModOrder; 3] = [ModOrder::Qam4, ModOrder::Qam16, ModOrder::Qam64];

    #[test]
    fn qpsk_points() {
        let s = qam_map(&[0, 0, 1, 1], ModOrder::Qam4, 1.0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - Complex64::new(r, r)).norm() < 1e-15);
        assert!((s[1] - Complex64::new(-r, -r)).norm() < 1e-15);
    }

    #[test]
    fn mean_power() {
        for order in ORDERS {
            let c = Constellation::new(order, 2.5);
            let p: f64 = c.points().iter().map(|v| v.norm_sqr()).sum::<f64>() / order.order() as f64;
            assert!((p - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for order in ORDERS {
            let c = Constellation::new(order, 1.0);
            let pts = c.points();
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts.iter().skip(i + 1).map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    if i != j && ((a - b).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{order} labels {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn misaligned_bits_rejected() {
        assert!(matches!(
            qam_map(&[0, 1, 1], ModOrder::Qam16, 1.0),
            Err(Error::BitAlignment { bits: 3, per_symbol: 4 })
        ));
    }

    #[test]
    fn tie_goes_to_lower_label() {
        let bits = qam_demap(&[Complex64::new(0.0, 0.0)], ModOrder::Qam4, 1.0);
        assert_eq!(bits, vec![0, 0]);
    }

    #[test]
    fn llr_sign_matches_hard_decision() {
        let c = Constellation::new(ModOrder::Qam16, 1.0);
        let bits: Vec<u8> = (0..64).map(|i| ((i * 7 + 3) % 5 % 2) as u8).collect();
        let s = c.map(&bits).unwrap();
        let noisy: Vec<_> = s.iter().map(|v| v + Complex64::new(0.03, -0.02)).collect();
        let llr = c.llr(&noisy, &vec![0.1; noisy.len()]);
        let hard: Vec<u8> = llr.iter().map(|l| (*l < 0.0) as u8).collect();
        assert_eq!(hard, bits);
    }

    proptest! {
        #[test]
        fn roundtrip(bits in prop::collection::vec(0u8..2, 0..60).prop_map(|v| {
            let n = v.len() / 12 * 12; v[..n].to_vec()
        }), power in 0.1f64..10.0) {
            for order in ORDERS {
                let s = qam_map(&bits, order, power).unwrap();
                prop_assert_eq!(qam_demap(&s, order, power), bits.clone());
            }
        }
    }
}
