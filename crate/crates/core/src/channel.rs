//! Quasi-static frequency-selective Rayleigh channel and AWGN.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Tap powers ρ_l² of a power delay profile, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    powers: Vec<f64>,
}

impl PowerDelayProfile {
    /// Accepts tap powers that already sum to one within 1e−9.
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        Self::check(&powers)?;
        let sum: f64 = powers.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProfile(format!("tap powers sum to {sum}, expected 1")));
        }
        Ok(Self { powers })
    }

    /// Rescales arbitrary non-negative tap powers to unit sum.
    pub fn normalized(powers: Vec<f64>) -> Result<Self> {
        Self::check(&powers)?;
        let sum: f64 = powers.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidProfile("total power is zero".into()));
        }
        Ok(Self { powers: powers.into_iter().map(|p| p / sum).collect() })
    }

    fn check(powers: &[f64]) -> Result<()> {
        if powers.is_empty() {
            return Err(Error::InvalidProfile("profile has no taps".into()));
        }
        if let Some(i) = powers.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProfile(format!("tap {i} power {} is invalid", powers[i])));
        }
        Ok(())
    }

    /// Exponentially decaying profile whose last tap sits `last_tap_db` below the first.
    pub fn exponential(taps: usize, last_tap_db: f64) -> Result<Self> {
        if taps == 0 {
            return Err(Error::InvalidProfile("profile has no taps".into()));
        }
        let step = if taps > 1 { last_tap_db / (taps - 1) as f64 } else { 0.0 };
        Self::normalized((0..taps).map(|l| 10f64.powf(-step * l as f64 / 10.0)).collect())
    }

    /// Single unit tap (flat fading).
    pub fn flat() -> Self {
        Self { powers: vec![1.0] }
    }

    /// Parses `l,rho2` rows; an optional non-numeric header and `#` comments
    /// are skipped. Missing delays get zero power.
    pub fn parse(text: &str, normalize: bool) -> Result<Self> {
        let mut powers: Vec<f64> = Vec::new();
        let mut seen_data = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(bad(format!("expected 'l,rho2', found '{line}'")));
            }
            let delay = fields[0].parse::<usize>();
            let power = fields[1].parse::<f64>();
            let (delay, power) = match (delay, power) {
                (Ok(d), Ok(p)) => (d, p),
                _ if !seen_data => {
                    seen_data = true;
                    continue;
                }
                _ => return Err(bad(format!("'{line}' is not a delay/power pair"))),
            };
            seen_data = true;
            if delay >= powers.len() {
                powers.resize(delay + 1, 0.0);
            }
            powers[delay] += power;
        }
        if normalize {
            Self::normalized(powers)
        } else {
            Self::new(powers)
        }
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// Number of taps L.
    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }
}

/// One channel draw: time-domain taps and the N-point frequency response.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Complex64>,
    pub freq: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn from_taps(taps: Vec<Complex64>, subcarriers: usize) -> Self {
        let freq = freq_response(&taps, subcarriers);
        Self { taps, freq }
    }

    /// Ideal channel h = [1].
    pub fn identity(subcarriers: usize) -> Self {
        Self::from_taps(vec![Complex64::new(1.0, 0.0)], subcarriers)
    }
}

/// Circularly-symmetric complex Gaussian sample with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

/// h_l = ρ_l z_l with z_l ~ CN(0, 1).
pub fn draw_channel<R: Rng + ?Sized>(
    pdp: &PowerDelayProfile,
    subcarriers: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if pdp.len() > subcarriers / 2 {
        return Err(Error::InvalidConfig(vec![format!(
            "n = {subcarriers} must be at least twice the channel length {}",
            pdp.len()
        )]));
    }
    let taps = pdp
        .powers()
        .iter()
        .map(|p| complex_gaussian(rng, 1.0) * p.sqrt())
        .collect();
    Ok(ChannelRealization::from_taps(taps, subcarriers))
}

/// C_n = Σ_l h_l e^{−j2πnl/N}.
pub fn freq_response(taps: &[Complex64], subcarriers: usize) -> Vec<Complex64> {
    (0..subcarriers)
        .map(|n| {
            taps.iter()
                .enumerate()
                .map(|(l, h)| {
                    let phase = -2.0 * PI * ((n * l) % subcarriers) as f64 / subcarriers as f64;
                    h * Complex64::from_polar(1.0, phase)
                })
                .sum()
        })
        .collect()
}

/// Linear convolution h * o truncated to len(o), plus leakage of the previous
/// block.
///
/// `prev_tail` holds the last transmitted samples of the previous block (at
/// least L−1 of them); it is passed through the same taps and its spill-over
/// lands on the first L−1 output samples.
pub fn apply_channel(o: &[Complex64], taps: &[Complex64], prev_tail: &[Complex64]) -> Result<Vec<Complex64>> {
    let l = taps.len();
    if !prev_tail.is_empty() && prev_tail.len() + 1 < l {
        return Err(Error::LengthMismatch { expected: l.saturating_sub(1), actual: prev_tail.len() });
    }
    let mut out = vec![Complex64::default(); o.len()];
    for (t, y) in out.iter_mut().enumerate() {
        for (d, h) in taps.iter().enumerate().take(t + 1) {
            *y += h * o[t - d];
        }
    }
    if !prev_tail.is_empty() {
        let spill = spill_over(prev_tail, taps);
        for (y, s) in out.iter_mut().zip(spill) {
            *y += s;
        }
    }
    Ok(out)
}

/// The L−1 samples of h * x that extend past the end of x.
pub fn spill_over(x: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    let l = taps.len();
    let len = x.len();
    (0..l.saturating_sub(1))
        .map(|k| {
            (k + 1..l)
                .filter(|d| *d <= len + k)
                .map(|d| taps[d] * x[len + k - d])
                .sum()
        })
        .collect()
}

/// Adds CN(0, σ²) noise in place.
pub fn add_noise<R: Rng + ?Sized>(r: &mut [Complex64], noise_var: f64, rng: &mut R) {
    if noise_var <= 0.0 {
        return;
    }
    for v in r.iter_mut() {
        *v += complex_gaussian(rng, noise_var);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponential_profile() {
        let p = PowerDelayProfile::exponential(8, 20.0).unwrap();
        let s: f64 = p.powers().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let ratio = 10.0 * (p.powers()[0] / p.powers()[7]).log10();
        assert!((ratio - 20.0).abs() < 1e-9);
    }

    #[test]
    fn profile_validation() {
        assert!(PowerDelayProfile::new(vec![0.5, 0.4]).is_err());
        assert!(PowerDelayProfile::new(vec![0.5, 0.5]).is_ok());
        assert!(PowerDelayProfile::normalized(vec![1.0, -1.0]).is_err());
        let p = PowerDelayProfile::parse("l,rho2\n0,2\n# c\n1,2\n", true).unwrap();
        assert_eq!(p.powers(), &[0.5, 0.5]);
        assert!(PowerDelayProfile::parse("0,2\n1,2\n", false).is_err());
        let p = PowerDelayProfile::parse("0,0.5\n2,0.5\n", false).unwrap();
        assert_eq!(p.powers(), &[0.5, 0.0, 0.5]);
        assert!(PowerDelayProfile::parse("0,0.5\nx,0.5\n", false).is_err());
    }

    #[test]
    fn long_channel_rejected() {
        let pdp = PowerDelayProfile::exponential(5, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(draw_channel(&pdp, 8, &mut rng).is_err());
        assert!(draw_channel(&pdp, 16, &mut rng).is_ok());
    }

    #[test]
    fn tap_power_statistics() {
        let pdp = PowerDelayProfile::normalized(vec![3.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 20_000;
        let mut acc = [0.0; 2];
        for _ in 0..trials {
            let ch = draw_channel(&pdp, 8, &mut rng).unwrap();
            acc[0] += ch.taps[0].norm_sqr();
            acc[1] += ch.taps[1].norm_sqr();
        }
        assert!((acc[0] / trials as f64 - 0.75).abs() < 0.03);
        assert!((acc[1] / trials as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn convolution_with_tail() {
        let o: Vec<Complex64> = (1..=4).map(|v| Complex64::new(v as f64, 0.0)).collect();
        let h = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let prev = [Complex64::new(10.0, 0.0)];
        let r = apply_channel(&o, &h, &prev).unwrap();
        let want = [6.0, 2.5, 4.0, 5.5];
        for (a, b) in r.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-15);
        }
        assert!(apply_channel(&o, &[Complex64::new(1.0, 0.0); 3], &prev).is_err());
    }

    #[test]
    fn flat_response() {
        let c = freq_response(&[Complex64::new(0.0, 2.0)], 4);
        assert!(c.iter().all(|v| (v - Complex64::new(0.0, 2.0)).norm() < 1e-15));
    }
}
