//! FBMC/QAM transmit and receive chains, one-tap equalization and the
//! CP-OFDM baseline.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{add_noise, apply_channel, ChannelRealization};
use crate::dft::Dft;
use crate::error::{check_len, Error, Result};
use crate::matrix::{BandedFilterMatrix, InverseFilterMatrix, OpCount};
use crate::prototype::PrototypeFilter;
use crate::qam::QamBlock;
use crate::system::{EqualizerKind, ReceiverMode, SystemConfig};

/// Diagonal one-tap equalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalizer {
    pub kind: EqualizerKind,
    /// E_n.
    pub coeffs: Vec<Complex64>,
    /// β_n = E_n C_n (real for both ZF and MMSE).
    pub beta: Vec<f64>,
}

impl Equalizer {
    /// Pass-through equalizer (E = 1).
    pub fn identity(n: usize) -> Self {
        Self {
            kind: EqualizerKind::Zf,
            coeffs: vec![Complex64::new(1.0, 0.0); n],
            beta: vec![1.0; n],
        }
    }

    /// ŝ = E y, applied segment by segment.
    pub fn apply(&self, y: &mut [Complex64]) {
        let n = self.coeffs.len();
        for seg in y.chunks_mut(n) {
            for (v, e) in seg.iter_mut().zip(&self.coeffs) {
                *v *= e;
            }
        }
    }
}

/// E = Cᴴ(CCᴴ + ν σ²/δ² I)⁻¹.
pub fn make_equalizer(c: &[Complex64], kind: EqualizerKind, noise_var: f64, symbol_power: f64) -> Result<Equalizer> {
    let reg = kind.nu() * noise_var / symbol_power;
    let mut coeffs = Vec::with_capacity(c.len());
    let mut beta = Vec::with_capacity(c.len());
    for (n, cn) in c.iter().enumerate() {
        let p = cn.norm_sqr();
        if kind == EqualizerKind::Zf && p == 0.0 {
            return Err(Error::SpectralNull(n));
        }
        let denom = p + reg;
        if denom == 0.0 {
            coeffs.push(Complex64::default());
            beta.push(0.0);
            continue;
        }
        coeffs.push(cn.conj() / denom);
        beta.push(p / denom);
    }
    Ok(Equalizer { kind, coeffs, beta })
}

/// Output of the FBMC receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub estimates: QamBlock,
    pub mode: ReceiverMode,
}

/// o = P · idft_block(S).
pub fn fbmc_transmit(s: &QamBlock, p: &BandedFilterMatrix, dft: &Dft) -> Result<Vec<Complex64>> {
    check_len(p.cols(), s.as_slice().len())?;
    let b = dft.idft_block(s)?;
    p.apply(&b)
}

/// x = Pᴴr, optional v = R x, per-segment DFT, then ŝ_m = E y_m.
pub fn fbmc_receive(
    r: &[Complex64],
    p: &BandedFilterMatrix,
    rinv: Option<&InverseFilterMatrix>,
    eq: &Equalizer,
    dft: &Dft,
) -> Result<ReceivedBlock> {
    let mut y = front_end(r, p, rinv, dft)?;
    check_len(p.subcarriers(), eq.coeffs.len())?;
    eq.apply(&mut y);
    let mode = if rinv.is_some() { ReceiverMode::If } else { ReceiverMode::Nif };
    Ok(ReceivedBlock {
        estimates: QamBlock::from_vec(p.subcarriers(), p.symbols(), y)?,
        mode,
    })
}

/// Receiver up to (not including) equalization: y = F·[R]·Pᴴ r per segment.
pub fn front_end(
    r: &[Complex64],
    p: &BandedFilterMatrix,
    rinv: Option<&InverseFilterMatrix>,
    dft: &Dft,
) -> Result<Vec<Complex64>> {
    let x = p.apply_adjoint(r)?;
    let mut y = match rinv {
        Some(rm) => {
            check_len(p.subcarriers(), rm.subcarriers())?;
            check_len(p.symbols(), rm.symbols())?;
            rm.apply(&x)?
        }
        None => x,
    };
    dft.forward_inplace(&mut y);
    Ok(y)
}

/// Prebuilt FBMC chain for one configuration: filter matrix, inverse filter
/// (when in IF mode) and transform plans.
#[derive(Debug, Clone)]
pub struct FbmcModem {
    pub p: BandedFilterMatrix,
    pub r: Option<InverseFilterMatrix>,
    pub dft: Dft,
}

impl FbmcModem {
    /// Builds the chain. In IF mode R is computed and sparsified by `cfg.eta`.
    pub fn new(cfg: &SystemConfig, proto: &PrototypeFilter) -> Result<Self> {
        cfg.validate()?;
        let p = BandedFilterMatrix::new(proto, cfg.symbols);
        let r = match cfg.receiver {
            ReceiverMode::Nif => None,
            ReceiverMode::If => Some(p.autocorrelation().invert()?.sparsify(cfg.eta)?),
        };
        Ok(Self { p, r, dft: Dft::new(cfg.subcarriers) })
    }

    /// Builds the chain with an already computed (possibly shared) inverse.
    pub fn with_inverse(p: BandedFilterMatrix, r: Option<InverseFilterMatrix>) -> Self {
        let dft = Dft::new(p.subcarriers());
        Self { p, r, dft }
    }

    pub fn transmit(&self, s: &QamBlock) -> Result<Vec<Complex64>> {
        fbmc_transmit(s, &self.p, &self.dft)
    }

    /// o = P b for an already transformed b.
    pub fn filter(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        self.p.apply(b)
    }

    pub fn front_end(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        front_end(r, &self.p, self.r.as_ref(), &self.dft)
    }

    pub fn receive(&self, r: &[Complex64], eq: &Equalizer) -> Result<ReceivedBlock> {
        fbmc_receive(r, &self.p, self.r.as_ref(), eq, &self.dft)
    }

    /// Real multiplications spent by the filtering stages for one block.
    pub fn filtering_cost(&self) -> (u64, u64) {
        let mut tx = OpCount::default();
        let mut rx = OpCount::default();
        let zeros = vec![Complex64::default(); self.p.cols()];
        let _ = self.p.apply_counted(&zeros, &mut tx);
        if let Some(r) = &self.r {
            let _ = r.apply_counted(&zeros, &mut rx);
        }
        (tx.real_mults, rx.real_mults)
    }
}

/// CP-OFDM modulator/demodulator.
#[derive(Debug, Clone)]
pub struct OfdmModem {
    pub cp_len: usize,
    pub dft: Dft,
}

impl OfdmModem {
    pub fn new(subcarriers: usize, cp_len: usize) -> Self {
        Self { cp_len, dft: Dft::new(subcarriers) }
    }

    pub fn subcarriers(&self) -> usize {
        self.dft.len()
    }

    /// Samples per OFDM symbol including the prefix.
    pub fn symbol_len(&self) -> usize {
        self.dft.len() + self.cp_len
    }

    /// Noise scaling (N + cp)/N that charges the prefix energy to the data.
    pub fn cp_penalty(&self) -> f64 {
        self.symbol_len() as f64 / self.dft.len() as f64
    }

    /// Frequency-domain symbols (consecutive N-segments) to time samples with CP.
    pub fn modulate(&self, symbols: &[Complex64]) -> Vec<Complex64> {
        let n = self.dft.len();
        let mut out = Vec::with_capacity(symbols.len() / n * self.symbol_len());
        for seg in symbols.chunks(n) {
            let mut t = seg.to_vec();
            self.dft.inverse_inplace(&mut t);
            out.extend_from_slice(&t[n - self.cp_len..]);
            out.extend_from_slice(&t);
        }
        out
    }

    /// Strips each prefix and transforms back to frequency domain.
    pub fn demodulate(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let n = self.dft.len();
        let mut out = Vec::with_capacity(samples.len() / self.symbol_len() * n);
        for sym in samples.chunks(self.symbol_len()) {
            if sym.len() < self.symbol_len() {
                break;
            }
            let mut t = sym[self.cp_len..].to_vec();
            self.dft.forward_inplace(&mut t);
            out.extend(t);
        }
        out
    }
}

/// One CP-OFDM symbol through channel and noise, equalized.
///
/// The noise variance is scaled by (N + cp)/N so that OFDM and FBMC are
/// compared at equal transmit energy per data symbol.
pub fn ofdm_roundtrip<R: Rng + ?Sized>(
    s: &[Complex64],
    channel: &ChannelRealization,
    noise_var: f64,
    cp_len: usize,
    kind: EqualizerKind,
    symbol_power: f64,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let n = s.len();
    check_len(n, channel.freq.len())?;
    if cp_len > n {
        return Err(Error::InvalidConfig(vec![format!("cp length {cp_len} exceeds N = {n}")]));
    }
    let modem = OfdmModem::new(n, cp_len);
    let effective = noise_var * modem.cp_penalty();
    let tx = modem.modulate(s);
    let mut rx = apply_channel(&tx, &channel.taps, &[])?;
    add_noise(&mut rx, effective, rng);
    let mut y = modem.demodulate(&rx);
    let eq = make_equalizer(&channel.freq, kind, effective, symbol_power)?;
    eq.apply(&mut y);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equalizer_values() {
        let c = [Complex64::new(0.5, 0.0)];
        let zf = make_equalizer(&c, EqualizerKind::Zf, 0.3, 1.0).unwrap();
        assert!((zf.coeffs[0] - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert_eq!(zf.beta[0], 1.0);

        let c = [Complex64::new(1.0, 0.0)];
        let mm = make_equalizer(&c, EqualizerKind::Mmse, 1.0, 1.0).unwrap();
        assert!((mm.coeffs[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((mm.beta[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zf_rejects_null() {
        let c = [Complex64::new(1.0, 0.0), Complex64::default()];
        assert_eq!(make_equalizer(&c, EqualizerKind::Zf, 0.1, 1.0).unwrap_err(), Error::SpectralNull(1));
        assert!(make_equalizer(&c, EqualizerKind::Mmse, 0.1, 1.0).is_ok());
    }

    #[test]
    fn mmse_tends_to_zf() {
        let c: Vec<_> = (0..8).map(|k| Complex64::from_polar(0.3 + k as f64 * 0.2, k as f64)).collect();
        let zf = make_equalizer(&c, EqualizerKind::Zf, 0.0, 1.0).unwrap();
        let mm = make_equalizer(&c, EqualizerKind::Mmse, 1e-12, 1.0).unwrap();
        for (a, b) in zf.coeffs.iter().zip(&mm.coeffs) {
            assert!((a - b).norm() < 1e-9);
        }
        assert!(mm.beta.iter().all(|b| (0.0..1.0).contains(b)));
    }

    #[test]
    fn ofdm_cp_structure() {
        let modem = OfdmModem::new(8, 2);
        let s: Vec<_> = (0..8).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let t = modem.modulate(&s);
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], t[8]);
        assert_eq!(t[1], t[9]);
        let back = modem.demodulate(&t);
        for (a, b) in back.iter().zip(&s) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
