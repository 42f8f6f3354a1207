//! Three-user sub-band campaign: independent streams, per-user fading and
//! timing offsets, coded BER of the middle band.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::seed::stream_rng;
use super::stats::{wilson_interval, Z95};
use super::{db_to_linear, MetricRow};
use crate::analytics::Analyzer;
use crate::channel::{add_noise, complex_gaussian, ChannelRealization, PowerDelayProfile};
use crate::error::{Error, Result};
use crate::fec::{coded_len, conv_encode, info_len, viterbi_decode, DecoderInput};
use crate::matrix::BandedFilterMatrix;
use crate::prototype::PrototypeFilter;
use crate::qam::{Constellation, QamBlock};
use crate::system::SystemConfig;
use crate::transceiver::{make_equalizer, FbmcModem, OfdmModem};

/// Waveform/receiver combination under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Ofdm,
    FbmcNif,
    FbmcIf { eta: f64 },
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::Ofdm => "ofdm".into(),
            Scheme::FbmcNif => "fbmc-nif".into(),
            Scheme::FbmcIf { eta } if *eta == 0.0 => "fbmc-if".into(),
            Scheme::FbmcIf { eta } => format!("fbmc-if-eta{eta}"),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Timing offset of a user's stream relative to the receiver's block grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimingOffset {
    Samples(usize),
    /// Fraction of the scheme's symbol interval (N for FBMC, N + cp for OFDM).
    SymbolFraction(f64),
}

impl TimingOffset {
    pub fn samples(&self, symbol_interval: usize) -> usize {
        match self {
            TimingOffset::Samples(s) => *s,
            TimingOffset::SymbolFraction(f) => (f * symbol_interval as f64).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubBand {
    pub start: usize,
    pub width: usize,
    pub offset: TimingOffset,
}

impl SubBand {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.width
    }
}

/// Three equal bands of N/4 separated by N/16 guard subcarriers.
pub fn default_bands(n: usize, neighbour_offset: TimingOffset) -> Vec<SubBand> {
    let width = n / 4;
    let gap = n / 16;
    (0..3)
        .map(|u| SubBand {
            start: gap + u * (width + gap),
            width,
            offset: if u == 1 { TimingOffset::Samples(0) } else { neighbour_offset },
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MultiserviceConfig {
    pub system: SystemConfig,
    pub prototype: PrototypeFilter,
    pub pdp: PowerDelayProfile,
    pub snr_db: Vec<f64>,
    pub bands: Vec<SubBand>,
    pub schemes: Vec<Scheme>,
    pub coded: bool,
    pub soft_decoding: bool,
    /// Blocks per SNR point and scheme.
    pub blocks: usize,
    pub cp_len: usize,
    /// Back-to-back FBMC blocks instead of an IBI-free guard interval.
    pub overlap_blocks: bool,
    pub seed: u64,
    pub progress: bool,
}

impl MultiserviceConfig {
    /// Preset with all users aligned.
    pub fn sync3band(system: SystemConfig, prototype: PrototypeFilter, pdp: PowerDelayProfile) -> Self {
        let n = system.subcarriers;
        let eta = system.eta;
        Self {
            bands: default_bands(n, TimingOffset::Samples(0)),
            schemes: vec![Scheme::Ofdm, Scheme::FbmcNif, Scheme::FbmcIf { eta }],
            cp_len: default_cp_len(n, pdp.len()),
            system,
            prototype,
            pdp,
            snr_db: (0..=8).map(|i| 2.0 * i as f64 + 4.0).collect(),
            coded: true,
            soft_decoding: true,
            blocks: 4600,
            overlap_blocks: false,
            seed: 1,
            progress: false,
        }
    }

    /// Preset with both neighbours delayed by half a symbol interval.
    pub fn async3band(system: SystemConfig, prototype: PrototypeFilter, pdp: PowerDelayProfile) -> Self {
        let mut cfg = Self::sync3band(system, prototype, pdp);
        cfg.bands = default_bands(cfg.system.subcarriers, TimingOffset::SymbolFraction(0.5));
        cfg
    }

    pub fn violations(&self) -> Vec<String> {
        let sys = &self.system;
        let n = sys.subcarriers;
        let mut v = sys.violations();
        if self.prototype.overlap() != sys.overlap || self.prototype.subcarriers() != n {
            v.push("prototype filter does not match (k, n)".into());
        }
        if n < 2 * self.pdp.len() {
            v.push(format!("n = {n} must be at least twice the channel length {}", self.pdp.len()));
        }
        if self.bands.len() != 3 {
            v.push(format!("exactly 3 sub-bands are required, found {}", self.bands.len()));
        }
        for (i, b) in self.bands.iter().enumerate() {
            if b.width == 0 || b.start + b.width > n {
                v.push(format!("sub-band {i} [{}, {}) lies outside [0, {n})", b.start, b.start + b.width));
            }
            let off = b.offset.samples(n + self.cp_len).max(b.offset.samples(n));
            if off >= n * sys.symbols {
                v.push(format!("sub-band {i} offset {off} must be below N·M = {}", n * sys.symbols));
            }
            for (j, o) in self.bands.iter().enumerate().skip(i + 1) {
                if b.start < o.start + o.width && o.start < b.start + b.width {
                    v.push(format!("sub-bands {i} and {j} overlap"));
                }
            }
        }
        if self.cp_len > n {
            v.push(format!("cp length {} exceeds n = {n}", self.cp_len));
        }
        if self.blocks == 0 {
            v.push("blocks must be positive".into());
        }
        if self.coded && self.bands.len() == 3 {
            let coded_bits = self.bands[1].width * sys.symbols * sys.mod_order.bits_per_symbol();
            if info_len(coded_bits) == 0 {
                v.push(format!("middle band carries only {coded_bits} coded bits per block; too few for a codeword"));
            }
        }
        v
    }
}

/// Smallest power-of-two fraction of N covering the channel delay spread.
pub fn default_cp_len(n: usize, taps: usize) -> usize {
    let need = taps.saturating_sub(1);
    let mut cp = n;
    while cp / 2 >= need && cp / 2 > 0 {
        cp /= 2;
    }
    if need == 0 {
        0
    } else {
        cp
    }
}

/// BER estimate of one (SNR, scheme, sub-band) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub subband: usize,
    pub errors: u64,
    pub bits: u64,
    pub blocks: u64,
}

impl BerPoint {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// 95% Wilson interval.
    pub fn interval(&self) -> (f64, f64) {
        wilson_interval(self.errors, self.bits, Z95)
    }

    pub fn half_width(&self) -> f64 {
        let (lo, hi) = self.interval();
        (hi - lo) / 2.0
    }
}

#[derive(Debug, Clone)]
pub struct MultiserviceResult {
    pub points: Vec<BerPoint>,
}

impl MultiserviceResult {
    pub fn point(&self, scheme: &Scheme, snr_db: f64) -> Option<&BerPoint> {
        self.points.iter().find(|p| p.scheme == *scheme && p.snr_db == snr_db)
    }

    pub fn rows(&self) -> Vec<MetricRow> {
        let mut out = Vec::new();
        for p in &self.points {
            let label = p.scheme.label();
            out.push(MetricRow::new(p.snr_db, &label, Some(p.subband), "ber", p.ber(), p.half_width()));
            out.push(MetricRow::new(p.snr_db, &label, Some(p.subband), "bit_errors", p.errors as f64, 0.0));
            out.push(MetricRow::new(p.snr_db, &label, Some(p.subband), "bits", p.bits as f64, 0.0));
        }
        out
    }
}

const CHUNK_BLOCKS: usize = 16;

/// Per-block, per-user random draws shared by every scheme.
struct UserBlock {
    bits: Vec<u8>,
    symbols: Vec<Complex64>,
    channel: ChannelRealization,
}

struct Waveform<'a> {
    scheme: Scheme,
    fbmc: Option<FbmcModem>,
    ofdm: Option<OfdmModem>,
    /// α_ICI + α_ISI per symbol index.
    interference: Vec<f64>,
    /// Noise gain (ζ for IF) per symbol index.
    noise_gain: Vec<f64>,
    cfg: &'a MultiserviceConfig,
}

impl Waveform<'_> {
    fn period(&self) -> usize {
        let sys = &self.cfg.system;
        let n = sys.subcarriers;
        match self.scheme {
            Scheme::Ofdm => sys.symbols * (n + self.cfg.cp_len),
            _ => {
                let guard = (sys.overlap - 1) * n + if self.cfg.overlap_blocks { 0 } else { self.cfg.pdp.len() - 1 };
                sys.symbols * n + guard
            }
        }
    }

    fn symbol_interval(&self) -> usize {
        match self.scheme {
            Scheme::Ofdm => self.cfg.system.subcarriers + self.cfg.cp_len,
            _ => self.cfg.system.subcarriers,
        }
    }

    fn noise_penalty(&self) -> f64 {
        match &self.ofdm {
            Some(o) => o.cp_penalty(),
            None => 1.0,
        }
    }

    fn modulate(&self, band: &SubBand, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
        let sys = &self.cfg.system;
        let n = sys.subcarriers;
        let mut block = QamBlock::zeros(n, sys.symbols);
        let width = band.width;
        for m in 0..sys.symbols {
            for (j, k) in band.range().enumerate() {
                block.set(k, m, symbols[m * width + j]);
            }
        }
        match (&self.fbmc, &self.ofdm) {
            (Some(f), _) => f.transmit(&block),
            (None, Some(o)) => Ok(o.modulate(block.as_slice())),
            _ => unreachable!("waveform without modem"),
        }
    }

    /// Equalized, unbiased band symbols and their effective noise variances.
    fn demodulate(
        &self,
        window: &[Complex64],
        band: &SubBand,
        channel: &ChannelRealization,
        noise_var: f64,
    ) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let sys = &self.cfg.system;
        let n = sys.subcarriers;
        let effective = noise_var * self.noise_penalty();
        let eq = make_equalizer(&channel.freq, sys.equalizer, effective, sys.symbol_power)?;
        let mut y = match (&self.fbmc, &self.ofdm) {
            (Some(f), _) => f.front_end(window)?,
            (None, Some(o)) => o.demodulate(window),
            _ => unreachable!("waveform without modem"),
        };
        eq.apply(&mut y);
        let mut est = Vec::with_capacity(sys.symbols * band.width);
        let mut var = Vec::with_capacity(sys.symbols * band.width);
        for m in 0..sys.symbols {
            for k in band.range() {
                let beta = eq.beta[k].max(1e-300);
                let e2 = eq.coeffs[k].norm_sqr();
                let c2 = channel.freq[k].norm_sqr();
                let v = e2 * (effective * self.noise_gain[m] + sys.symbol_power * c2 * self.interference[m]);
                est.push(y[m * n + k] / beta);
                var.push(v / (beta * beta));
            }
        }
        Ok((est, var))
    }

    fn window_len(&self) -> usize {
        match (&self.fbmc, &self.ofdm) {
            (Some(f), _) => f.p.rows(),
            _ => self.period(),
        }
    }
}

fn draw_blocks<R: Rng>(
    cfg: &MultiserviceConfig,
    constellation: &Constellation,
    rng: &mut R,
) -> Result<Vec<UserBlock>> {
    let sys = &cfg.system;
    let q = constellation.bits_per_symbol();
    cfg.bands
        .iter()
        .enumerate()
        .map(|(u, band)| {
            let slots = band.width * sys.symbols * q;
            let (bits, coded) = if u == 1 && cfg.coded {
                let info: Vec<u8> = (0..info_len(slots)).map(|_| rng.random_range(0..2u8)).collect();
                let mut coded = conv_encode(&info);
                coded.resize(slots, 0);
                (info, coded)
            } else {
                let raw: Vec<u8> = (0..slots).map(|_| rng.random_range(0..2u8)).collect();
                (raw.clone(), raw)
            };
            let symbols = constellation.map(&coded)?;
            let taps = cfg
                .pdp
                .powers()
                .iter()
                .map(|p| complex_gaussian(rng, 1.0) * p.sqrt())
                .collect();
            Ok(UserBlock {
                bits,
                symbols,
                channel: ChannelRealization::from_taps(taps, sys.subcarriers),
            })
        })
        .collect()
}

fn run_chunk(
    wf: &Waveform<'_>,
    constellation: &Constellation,
    snr_idx: usize,
    noise_var: f64,
    chunk: usize,
    blocks: usize,
) -> Result<(u64, u64)> {
    let cfg = wf.cfg;
    let mut data_rng = stream_rng(cfg.seed, &[2, snr_idx as u64, chunk as u64, 0]);
    let mut noise_rng = stream_rng(cfg.seed, &[2, snr_idx as u64, chunk as u64, 1]);
    let draws: Vec<Vec<UserBlock>> = (0..=blocks)
        .map(|_| draw_blocks(cfg, constellation, &mut data_rng))
        .collect::<Result<_>>()?;

    let period = wf.period();
    let interval = wf.symbol_interval();
    let offsets: Vec<usize> = cfg.bands.iter().map(|b| b.offset.samples(interval)).collect();
    let max_off = offsets.iter().copied().max().unwrap_or(0);
    let taps = cfg.pdp.len();
    let total = (blocks + 2) * period + max_off + wf.window_len() + taps;
    let mut rx = vec![Complex64::default(); total];

    for (t, users) in draws.iter().enumerate() {
        for (u, ub) in users.iter().enumerate() {
            let x = wf.modulate(&cfg.bands[u], &ub.symbols)?;
            let start = t * period + offsets[u];
            for (i, xv) in x.iter().enumerate() {
                for (d, h) in ub.channel.taps.iter().enumerate() {
                    rx[start + i + d] += h * xv;
                }
            }
        }
    }
    add_noise(&mut rx, noise_var * wf.noise_penalty(), &mut noise_rng);

    let victim = &cfg.bands[1];
    let mut errors = 0u64;
    let mut bits = 0u64;
    for (t, users) in draws.iter().enumerate().skip(1) {
        let start = t * period + offsets[1];
        let window = &rx[start..start + wf.window_len()];
        let ub = &users[1];
        let (est, var) = wf.demodulate(window, victim, &ub.channel, noise_var)?;
        let decided = if cfg.coded {
            let used = coded_len(info_len(est.len() * constellation.bits_per_symbol()));
            if cfg.soft_decoding {
                let llr = constellation.llr(&est, &var);
                viterbi_decode(DecoderInput::Soft(&llr[..used]))?
            } else {
                let hard = constellation.demap(&est);
                viterbi_decode(DecoderInput::Hard(&hard[..used]))?
            }
        } else {
            constellation.demap(&est)
        };
        errors += decided.iter().zip(&ub.bits).filter(|(a, b)| a != b).count() as u64;
        bits += ub.bits.len() as u64;
    }
    Ok((errors, bits))
}

/// Runs every configured scheme over the SNR grid.
pub fn run_multiservice(cfg: &MultiserviceConfig) -> Result<MultiserviceResult> {
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let sys = &cfg.system;
    let constellation = Constellation::new(sys.mod_order, sys.symbol_power);
    let p = BandedFilterMatrix::new(&cfg.prototype, sys.symbols);
    let needs_inverse = cfg.schemes.iter().any(|s| matches!(s, Scheme::FbmcIf { .. }));
    let exact = if needs_inverse { Some(p.autocorrelation().invert()?) } else { None };

    let chunks: Vec<(usize, usize)> = (0..cfg.blocks.div_ceil(CHUNK_BLOCKS))
        .map(|c| (c, CHUNK_BLOCKS.min(cfg.blocks - c * CHUNK_BLOCKS)))
        .collect();

    let mut points = Vec::new();
    for scheme in &cfg.schemes {
        let (fbmc, ofdm) = match scheme {
            Scheme::Ofdm => (None, Some(OfdmModem::new(sys.subcarriers, cfg.cp_len))),
            Scheme::FbmcNif => (Some(FbmcModem::with_inverse(p.clone(), None)), None),
            Scheme::FbmcIf { eta } => {
                let r = exact.as_ref().expect("inverse computed").sparsify(*eta)?;
                (Some(FbmcModem::with_inverse(p.clone(), Some(r))), None)
            }
        };
        let (interference, noise_gain) = match &fbmc {
            Some(f) => {
                let a = Analyzer::new(&f.p, f.r.as_ref())?;
                let inter = (0..sys.symbols)
                    .map(|m| {
                        let q = a.interference_coeffs(m);
                        q.alpha_ici[0] + q.alpha_isi[0]
                    })
                    .collect();
                (inter, a.noise_gain().to_vec())
            }
            None => (vec![0.0; sys.symbols], vec![1.0; sys.symbols]),
        };
        let wf = Waveform { scheme: *scheme, fbmc, ofdm, interference, noise_gain, cfg };

        let jobs: Vec<(usize, usize, usize)> = (0..cfg.snr_db.len())
            .flat_map(|s| chunks.iter().map(move |(c, b)| (s, *c, *b)))
            .collect();
        let results: Vec<Result<(u64, u64)>> = jobs
            .par_iter()
            .map(|(s, c, b)| {
                let noise_var = sys.symbol_power / db_to_linear(cfg.snr_db[*s]);
                run_chunk(&wf, &constellation, *s, noise_var, *c, *b)
            })
            .collect();
        let mut tally = vec![(0u64, 0u64); cfg.snr_db.len()];
        for ((s, _, _), r) in jobs.iter().zip(results) {
            let (e, b) = r?;
            tally[*s].0 += e;
            tally[*s].1 += b;
        }
        for (s, (errors, bits)) in tally.into_iter().enumerate() {
            if cfg.progress {
                eprintln!(
                    "{}: snr {:.1} dB, {} blocks, ber {:.3e}",
                    scheme.label(),
                    cfg.snr_db[s],
                    cfg.blocks,
                    if bits == 0 { 0.0 } else { errors as f64 / bits as f64 }
                );
            }
            points.push(BerPoint {
                snr_db: cfg.snr_db[s],
                scheme: *scheme,
                subband: 1,
                errors,
                bits,
                blocks: cfg.blocks as u64,
            });
        }
    }
    Ok(MultiserviceResult { points })
}
