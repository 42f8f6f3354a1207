//! Monte-Carlo campaigns: MSE validation on fixed channels and coded BER of
//! the three-user sub-band scenario.

pub mod link;
pub mod multiservice;
pub mod seed;
pub mod stats;

pub use link::{run_link_validation, LinkConfig, LinkResult};
pub use multiservice::{run_multiservice, BerPoint, MultiserviceConfig, MultiserviceResult, Scheme, SubBand, TimingOffset};

use crate::error::Result;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One long-format output row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub snr_db: f64,
    pub scheme: String,
    pub subband: Option<usize>,
    pub metric: String,
    pub value: f64,
    pub ci_halfwidth: f64,
}

impl MetricRow {
    pub fn new(snr_db: f64, scheme: &str, subband: Option<usize>, metric: &str, value: f64, ci_halfwidth: f64) -> Self {
        Self {
            snr_db,
            scheme: scheme.to_string(),
            subband,
            metric: metric.to_string(),
            value,
            ci_halfwidth,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Link(LinkConfig),
    Multiservice(MultiserviceConfig),
}

/// Runs each scenario with a seed derived from `master` and its position.
pub fn sweep(master: u64, scenarios: &[Scenario]) -> Result<Vec<MetricRow>> {
    let mut rows = Vec::new();
    for (i, sc) in scenarios.iter().enumerate() {
        let s = seed::derive_seed(master, &[i as u64]);
        match sc {
            Scenario::Link(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = s;
                rows.extend(run_link_validation(&cfg)?.rows());
            }
            Scenario::Multiservice(cfg) => {
                let mut cfg = cfg.clone();
                cfg.seed = s;
                rows.extend(run_multiservice(&cfg)?.rows());
            }
        }
    }
    Ok(rows)
}
