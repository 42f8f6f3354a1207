use anyhow::Result;
use fbmc_core::analytics::{complexity_report, compute_zeta, Analyzer, Component};
use fbmc_core::channel::draw_channel;
use fbmc_core::matrix::BandedFilterMatrix;
use fbmc_core::simulator::multiservice::default_bands;
use fbmc_core::simulator::seed::stream_rng;
use fbmc_core::simulator::{
    db_to_linear, run_link_validation, run_multiservice, LinkConfig, MetricRow, MultiserviceConfig, TimingOffset,
};
use fbmc_core::system::ReceiverMode;
use fbmc_core::transceiver::make_equalizer;

use crate::output::{fmt_db, OutputSet};
use crate::settings::{Preset, Settings};

const COMPLEXITY_HEADER: &str = "n,m,k,eta,c_tx,c_rx_nif,c_r,c_rx_if,c_r_mask,measured_p_block,measured_r_symbol";

fn complexity_row(s: &Settings) -> Result<String> {
    let r = complexity_report(s.n, s.m, s.k, s.eta)?;
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        s.n, s.m, s.k, s.eta, r.c_tx, r.c_rx_nif, r.c_r, r.c_rx_if, r.c_r_mask, r.measured_p_block, r.measured_r_symbol
    ))
}

pub fn complexity(s: &Settings, out: &mut OutputSet) -> Result<()> {
    s.system()?;
    out.csv("complexity.csv", COMPLEXITY_HEADER, [complexity_row(s)?])
}

/// Prototype taps, G bands, R block norms, ζ per (m, n) and the cost summary.
pub fn filter(s: &Settings, out: &mut OutputSet) -> Result<()> {
    let sys = s.system()?;
    let proto = s.prototype()?;
    let p = BandedFilterMatrix::new(&proto, sys.symbols);
    let g = p.autocorrelation();
    let r = g.invert()?.sparsify(sys.eta)?;
    let (n, m) = (sys.subcarriers, sys.symbols);

    out.csv("prototype.csv", "index,coefficient", proto.coeffs().iter().enumerate().map(|(i, w)| format!("{i},{w}")))?;
    let bands = (0..g.band_count()).flat_map(|d| g.band(d).iter().enumerate().map(move |(c, v)| format!("{d},{c},{v}")));
    out.csv("g_bands.csv", "band,c,value", bands)?;
    let norms = (0..m).flat_map(|a| {
        let r = &r;
        (0..m).map(move |i| {
            let norm = r.block(a, i).iter().map(|v| v * v).sum::<f64>().sqrt();
            format!("{a},{i},{norm}")
        })
    });
    out.csv("r_norms.csv", "m,i,frobenius_norm", norms)?;
    let mut zeta = Vec::with_capacity(n * m);
    for a in 0..m {
        for (k, z) in compute_zeta(&r, &g, a).iter().enumerate() {
            zeta.push(format!("{a},{k},{z}"));
        }
    }
    out.csv("zeta.csv", "m,n,zeta", zeta)?;
    out.csv("complexity.csv", COMPLEXITY_HEADER, [complexity_row(s)?])
}

/// Closed-form MSE breakdown on one seeded channel, both receiver modes.
pub fn analyze(s: &Settings, out: &mut OutputSet) -> Result<()> {
    let sys = s.system()?;
    let proto = s.prototype()?;
    let pdp = s.pdp()?;
    sys.check_channel_len(pdp.len())?;
    let p = BandedFilterMatrix::new(&proto, sys.symbols);
    let r = p.autocorrelation().invert()?.sparsify(sys.eta)?;
    let channel = draw_channel(&pdp, sys.subcarriers, &mut stream_rng(s.seed, &[0]))?;
    let modes = [(ReceiverMode::Nif, Analyzer::new(&p, None)?), (ReceiverMode::If, Analyzer::new(&p, Some(&r))?)];

    let mut rows = Vec::new();
    for &snr in &s.snr_db {
        let noise_var = sys.symbol_power / db_to_linear(snr);
        let eq = make_equalizer(&channel.freq, sys.equalizer, noise_var, sys.symbol_power)?;
        for (mode, analyzer) in &modes {
            let b = analyzer.mse_closed_form(&channel, &pdp, &eq, noise_var, sys.symbol_power, !s.overlap_blocks)?;
            for c in Component::ALL.into_iter().filter(|c| c.applies_to(*mode)) {
                for a in 0..sys.symbols {
                    for k in 0..sys.subcarriers {
                        rows.push(format!("{snr},{mode},{a},{k},{c},{}", fmt_db(b.get(c, a, k))));
                    }
                }
                rows.push(format!("{snr},{mode},avg,avg,{c},{}", fmt_db(b.block_average(c))));
            }
        }
    }
    out.csv("analyze.csv", "snr_db,mode,m,n,component,value_db", rows)
}

fn metric_line(r: &MetricRow) -> String {
    let band = r.subband.map_or("all".to_string(), |b| b.to_string());
    format!("{},{},{band},{},{},{}", r.snr_db, r.scheme, r.metric, r.value, r.ci_halfwidth)
}

pub fn simulate(s: &Settings, out: &mut OutputSet, progress: bool) -> Result<()> {
    let system = s.system()?;
    let prototype = s.prototype()?;
    let pdp = s.pdp()?;
    let rows = match s.preset {
        Preset::Link => {
            let cfg = LinkConfig {
                system,
                prototype,
                pdp,
                snr_db: s.snr_db.clone(),
                symbols: s.symbols,
                overlap_blocks: s.overlap_blocks,
                channel: None,
                seed: s.seed,
            };
            run_link_validation(&cfg)?.rows()
        }
        Preset::Sync3band | Preset::Async3band => {
            let mut cfg = MultiserviceConfig::sync3band(system, prototype, pdp);
            if s.preset == Preset::Async3band {
                cfg.bands = default_bands(cfg.system.subcarriers, TimingOffset::SymbolFraction(s.offset));
            }
            cfg.snr_db = s.snr_db.clone();
            cfg.blocks = s.blocks;
            cfg.seed = s.seed;
            cfg.coded = s.coded;
            cfg.soft_decoding = s.soft_decoding;
            cfg.overlap_blocks = s.overlap_blocks;
            if let Some(cp) = s.cp_len {
                cfg.cp_len = cp;
            }
            cfg.progress = progress;
            run_multiservice(&cfg)?.rows()
        }
    };
    out.csv("simulate.csv", "snr_db,scheme,subband,metric,value,ci_halfwidth", rows.iter().map(metric_line))
}
