//! Prototype filter design and loading.

use crate::error::{Error, Result};

/// Frequency-sampling coefficients H_1..H_{K−1} (H_0 = 1) for K = 2..8.
// Published values, kept at their rounded eight-digit form.
#[allow(clippy::approx_constant)]
const PHYDYAS: [&[f64]; 7] = [
    &[0.707_106_78],
    &[0.911_437_83, 0.411_437_83],
    &[0.971_959_83, 0.707_106_78, 0.235_146_95],
    &[0.991_841_31, 0.865_416_24, 0.501_053_61, 0.127_478_68],
    &[0.998_185_72, 0.948_386_78, 0.707_106_78, 0.317_115_93, 0.060_210_21],
    &[0.999_380_80, 0.978_385_60, 0.843_900_76, 0.536_499_31, 0.206_788_81, 0.035_185_46],
    &[0.999_325_88, 0.982_031_68, 0.894_251_29, 0.707_106_78, 0.447_565_22, 0.188_716_14, 0.036_712_21],
];

/// Real, symmetric prototype filter w of length K·N with Σ w² = N.
///
/// With this scaling every polyphase component has unit mean power, so the
/// diagonal of the autocorrelation matrix averages to one and K = 1 yields
/// the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    overlap: usize,
    subcarriers: usize,
    coeffs: Vec<f64>,
}

impl PrototypeFilter {
    /// Designs the frequency-sampling prototype for overlap factor K.
    pub fn design(overlap: usize, subcarriers: usize) -> Result<Self> {
        if !(1..=8).contains(&overlap) {
            return Err(Error::UnsupportedOverlap(overlap));
        }
        if !subcarriers.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(subcarriers));
        }
        let len = overlap * subcarriers;
        let coeffs = if overlap == 1 {
            vec![1.0; len]
        } else {
            let h = PHYDYAS[overlap - 2];
            let kn = len as f64;
            (0..len)
                .map(|k| {
                    let t = k as f64 + 0.5;
                    1.0 + 2.0
                        * h.iter()
                            .enumerate()
                            .map(|(i, hi)| {
                                let i = i + 1;
                                let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
                                sign * hi * (2.0 * std::f64::consts::PI * i as f64 * t / kn).cos()
                            })
                            .sum::<f64>()
                })
                .collect()
        };
        Ok(Self::normalized(overlap, subcarriers, coeffs))
    }

    /// Wraps user-supplied coefficients, rescaling them to Σ w² = N.
    pub fn from_coefficients(overlap: usize, subcarriers: usize, coeffs: Vec<f64>) -> Result<Self> {
        if overlap == 0 {
            return Err(Error::UnsupportedOverlap(overlap));
        }
        if !subcarriers.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(subcarriers));
        }
        if coeffs.len() != overlap * subcarriers {
            return Err(Error::InvalidFilter(format!(
                "expected {} coefficients (K·N), found {}",
                overlap * subcarriers,
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidFilter(format!("coefficient {i} is not finite")));
        }
        if coeffs.iter().all(|c| *c == 0.0) {
            return Err(Error::InvalidFilter("all coefficients are zero".into()));
        }
        Ok(Self::normalized(overlap, subcarriers, coeffs))
    }

    /// Parses one coefficient per line (blank lines and `#` comments ignored).
    pub fn parse(text: &str, overlap: usize, subcarriers: usize) -> Result<Self> {
        let mut coeffs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("'{line}' is not a number"),
            })?;
            coeffs.push(v);
        }
        Self::from_coefficients(overlap, subcarriers, coeffs)
    }

    fn normalized(overlap: usize, subcarriers: usize, mut coeffs: Vec<f64>) -> Self {
        let energy: f64 = coeffs.iter().map(|c| c * c).sum();
        let scale = (subcarriers as f64 / energy).sqrt();
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Self { overlap, subcarriers, coeffs }
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// w[k·N + c], i.e. tap k of polyphase component c.
    #[inline]
    pub fn tap(&self, k: usize, c: usize) -> f64 {
        self.coeffs[k * self.subcarriers + c]
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}
