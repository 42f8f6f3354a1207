//! Single-user link validation: measures every MSE component by isolation
//! runs and pairs it with the closed-form prediction.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::seed::stream_rng;
use super::stats::MeanAccumulator;
use super::{db_to_linear, MetricRow};
use crate::analytics::{Analyzer, Component, MseBreakdown};
use crate::channel::{add_noise, apply_channel, draw_channel, spill_over, ChannelRealization, PowerDelayProfile};
use crate::error::{Error, Result};
use crate::prototype::PrototypeFilter;
use crate::qam::{Constellation, QamBlock};
use crate::system::{ReceiverMode, SystemConfig};
use crate::transceiver::{make_equalizer, Equalizer, FbmcModem};

/// Components measured by the isolation runs, in reporting order.
pub const MEASURED: [Component; 7] = [
    Component::Resd,
    Component::Ici,
    Component::Isi,
    Component::Fd,
    Component::Ibi,
    Component::Noise,
    Component::Total,
];

/// Single full-band user over a fixed channel realization.
#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub system: SystemConfig,
    pub prototype: PrototypeFilter,
    pub pdp: PowerDelayProfile,
    pub snr_db: Vec<f64>,
    /// QAM symbols simulated per SNR point (rounded up to whole blocks).
    pub symbols: usize,
    /// Back-to-back blocks: the previous block leaks through the channel.
    pub overlap_blocks: bool,
    /// Channel to use; drawn from `seed` when absent.
    pub channel: Option<ChannelRealization>,
    pub seed: u64,
}

impl LinkConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.system.violations();
        if self.prototype.overlap() != self.system.overlap || self.prototype.subcarriers() != self.system.subcarriers {
            v.push("prototype filter does not match (k, n)".into());
        }
        if self.system.subcarriers < 2 * self.pdp.len() {
            v.push(format!(
                "n = {} must be at least twice the channel length {}",
                self.system.subcarriers,
                self.pdp.len()
            ));
        }
        if self.symbols == 0 {
            v.push("symbols must be positive".into());
        }
        if let Some(ch) = &self.channel {
            if ch.freq.len() != self.system.subcarriers {
                v.push("channel frequency response length differs from n".into());
            }
        }
        v
    }
}

/// One measured component next to its prediction (linear power).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMeasurement {
    pub component: Component,
    pub measured: f64,
    pub std_error: f64,
    pub predicted: f64,
}

impl ComponentMeasurement {
    /// |measured − predicted| in units of the standard error.
    pub fn sigmas(&self) -> f64 {
        let d = (self.measured - self.predicted).abs();
        if d <= 1e-12 * self.predicted.abs() {
            0.0
        } else {
            d / self.std_error
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinkPoint {
    pub snr_db: f64,
    pub noise_var: f64,
    pub blocks: usize,
    pub components: Vec<ComponentMeasurement>,
    /// Mean of the total error power minus the sum of component powers.
    pub cross: MeanAccumulator,
    /// Largest |total − Σ components| over all symbols (linearity check).
    pub max_split_residual: f64,
    /// Closed-form prediction for this channel (block-average used above).
    pub prediction: MseBreakdown,
}

impl LinkPoint {
    pub fn component(&self, c: Component) -> &ComponentMeasurement {
        self.components.iter().find(|m| m.component == c).expect("measured component")
    }
}

#[derive(Debug, Clone)]
pub struct LinkResult {
    pub mode: ReceiverMode,
    pub symbol_power: f64,
    pub channel: ChannelRealization,
    pub points: Vec<LinkPoint>,
}

impl LinkResult {
    pub fn rows(&self) -> Vec<MetricRow> {
        let scheme = match self.mode {
            ReceiverMode::Nif => "fbmc-nif",
            ReceiverMode::If => "fbmc-if",
        };
        let mut out = Vec::new();
        for p in &self.points {
            for c in &p.components {
                out.push(MetricRow::new(p.snr_db, scheme, None, &format!("mse_{}", c.component), c.measured, 3.0 * c.std_error));
                out.push(MetricRow::new(p.snr_db, scheme, None, &format!("predicted_{}", c.component), c.predicted, 0.0));
            }
            out.push(MetricRow::new(p.snr_db, scheme, None, "mse_cross", p.cross.mean(), 3.0 * p.cross.std_error()));
            let total = p.component(Component::Total);
            out.push(MetricRow::new(p.snr_db, scheme, None, "sinr", self.symbol_power / total.measured, 0.0));
        }
        out
    }
}

const CHUNK_BLOCKS: usize = 8;

#[derive(Default, Clone)]
struct ChunkStats {
    comps: [MeanAccumulator; 7],
    cross: MeanAccumulator,
    max_residual: f64,
}

impl ChunkStats {
    fn merge(&mut self, other: &Self) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.merge(b);
        }
        self.cross.merge(&other.cross);
        self.max_residual = self.max_residual.max(other.max_residual);
    }
}

struct Context<'a> {
    cfg: &'a LinkConfig,
    modem: FbmcModem,
    constellation: Constellation,
    channel: ChannelRealization,
    /// Diagonal gain E_n C_n d̂_{m,m}[0] per (m, n).
    gain: Vec<Complex64>,
    eq: Equalizer,
    noise_var: f64,
}

impl Context<'_> {
    fn rx(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut y = self.modem.front_end(r)?;
        self.eq.apply(&mut y);
        Ok(y)
    }

    fn random_block<R: Rng>(&self, rng: &mut R) -> Result<QamBlock> {
        let sys = &self.cfg.system;
        let q = self.constellation.bits_per_symbol();
        let bits: Vec<u8> = (0..sys.symbols_per_block() * q).map(|_| rng.random_range(0..2u8)).collect();
        QamBlock::from_vec(sys.subcarriers, sys.symbols, self.constellation.map(&bits)?)
    }

    fn run_chunk(&self, snr_idx: usize, chunk: usize, blocks: usize) -> Result<ChunkStats> {
        let sys = &self.cfg.system;
        let (n, m) = (sys.subcarriers, sys.symbols);
        let mut rng = stream_rng(self.cfg.seed, &[1, snr_idx as u64, chunk as u64]);
        let p = &self.modem.p;
        let dft = &self.modem.dft;
        let h = &self.channel.taps;
        let len = p.rows();

        let mut prev = p.apply(&dft.idft_block(&self.random_block(&mut rng)?)?)?;
        let mut stats = ChunkStats::default();
        for _ in 0..blocks {
            let s = self.random_block(&mut rng)?;
            let b = dft.idft_block(&s)?;
            let o = p.apply(&b)?;

            let mut cs = s.clone();
            for (idx, v) in cs.as_mut_slice().iter_mut().enumerate() {
                *v *= self.channel.freq[idx % n];
            }
            let b_cir = dft.idft_block(&cs)?;
            let o_cir = p.apply(&b_cir)?;
            let r_lin = apply_channel(&o, h, &[])?;
            let r_fd: Vec<Complex64> = r_lin.iter().zip(&o_cir).map(|(a, c)| a - c).collect();
            let mut r_ibi = vec![Complex64::default(); len];
            if self.cfg.overlap_blocks {
                for (slot, v) in r_ibi.iter_mut().zip(spill_over(&prev, h)) {
                    *slot = v;
                }
            }
            let mut noise = vec![Complex64::default(); len];
            add_noise(&mut noise, self.noise_var, &mut rng);
            let r: Vec<Complex64> = (0..len).map(|t| r_lin[t] + r_ibi[t] + noise[t]).collect();

            let y_cir = self.rx(&o_cir)?;
            let y_fd = self.rx(&r_fd)?;
            let y_ibi = self.rx(&r_ibi)?;
            let y_noise = self.rx(&noise)?;
            let y = self.rx(&r)?;

            let mut acc = [0.0f64; 7];
            let mut cross = 0.0;
            for mi in 0..m {
                let mut single = vec![Complex64::default(); m * n];
                single[mi * n..(mi + 1) * n].copy_from_slice(&b_cir[mi * n..(mi + 1) * n]);
                let y_single = self.rx(&p.apply(&single)?)?;
                for nn in 0..n {
                    let idx = mi * n + nn;
                    let sv = s.as_slice()[idx];
                    let resd = (self.gain[idx] - 1.0) * sv;
                    let ici = y_single[idx] - self.gain[idx] * sv;
                    let isi = y_cir[idx] - y_single[idx];
                    let parts = [resd, ici, isi, y_fd[idx], y_ibi[idx], y_noise[idx]];
                    let total = y[idx] - sv;
                    let split: Complex64 = parts.iter().sum();
                    stats.max_residual = stats.max_residual.max((total - split).norm());
                    let mut sum_sq = 0.0;
                    for (a, v) in acc.iter_mut().zip(parts.iter()) {
                        *a += v.norm_sqr();
                        sum_sq += v.norm_sqr();
                    }
                    acc[6] += total.norm_sqr();
                    cross += total.norm_sqr() - sum_sq;
                }
            }
            let count = (m * n) as f64;
            for (c, a) in stats.comps.iter_mut().zip(acc) {
                c.push(a / count);
            }
            stats.cross.push(cross / count);
            prev = o;
        }
        Ok(stats)
    }
}

/// Runs the isolation experiment for every SNR point of `cfg`.
pub fn run_link_validation(cfg: &LinkConfig) -> Result<LinkResult> {
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(Error::InvalidConfig(v));
    }
    let sys = &cfg.system;
    let modem = FbmcModem::new(sys, &cfg.prototype)?;
    let channel = match &cfg.channel {
        Some(c) => c.clone(),
        None => draw_channel(&cfg.pdp, sys.subcarriers, &mut stream_rng(cfg.seed, &[0]))?,
    };
    let analyzer = Analyzer::new(&modem.p, modem.r.as_ref())?;
    let diag: Vec<Complex64> = (0..sys.symbols)
        .map(|m| analyzer.interference_coeffs(m).d_hat[m][0])
        .collect();
    let per_block = sys.symbols_per_block();
    let blocks = cfg.symbols.div_ceil(per_block);
    let chunks: Vec<(usize, usize)> = (0..blocks.div_ceil(CHUNK_BLOCKS))
        .map(|c| (c, CHUNK_BLOCKS.min(blocks - c * CHUNK_BLOCKS)))
        .collect();

    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for (snr_idx, snr_db) in cfg.snr_db.iter().enumerate() {
        let noise_var = sys.symbol_power / db_to_linear(*snr_db);
        let eq = make_equalizer(&channel.freq, sys.equalizer, noise_var, sys.symbol_power)?;
        let gain = (0..per_block)
            .map(|idx| eq.coeffs[idx % sys.subcarriers] * channel.freq[idx % sys.subcarriers] * diag[idx / sys.subcarriers])
            .collect();
        let ctx = Context {
            cfg,
            modem: modem.clone(),
            constellation: Constellation::new(sys.mod_order, sys.symbol_power),
            channel: channel.clone(),
            gain,
            eq: eq.clone(),
            noise_var,
        };
        let parts: Vec<Result<ChunkStats>> = chunks
            .par_iter()
            .map(|(c, count)| ctx.run_chunk(snr_idx, *c, *count))
            .collect();
        let mut stats = ChunkStats::default();
        for part in parts {
            stats.merge(&part?);
        }
        let prediction = analyzer.mse_conditional(&channel, &cfg.pdp, &eq, noise_var, sys.symbol_power, !cfg.overlap_blocks)?;
        let components = MEASURED
            .iter()
            .zip(&stats.comps)
            .map(|(c, acc)| ComponentMeasurement {
                component: *c,
                measured: acc.mean(),
                std_error: acc.std_error(),
                predicted: prediction.block_average(*c),
            })
            .collect();
        points.push(LinkPoint {
            snr_db: *snr_db,
            noise_var,
            blocks,
            components,
            cross: stats.cross,
            max_split_residual: stats.max_residual,
            prediction,
        });
    }
    Ok(LinkResult { mode: sys.receiver, symbol_power: sys.symbol_power, channel, points })
}
