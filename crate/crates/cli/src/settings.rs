//! Flat `key = value` run configuration shared by every subcommand.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fbmc_core::channel::PowerDelayProfile;
use fbmc_core::prototype::PrototypeFilter;
use fbmc_core::system::{EqualizerKind, ModOrder, ReceiverMode, SystemConfig};

/// Keys that appear in a manifest but are not configuration.
const MANIFEST_KEYS: [&str; 4] = ["tool_version", "command", "wall_time_s", "outputs"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Sync3band,
    Async3band,
    Link,
}

impl Preset {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "sync3band" => Ok(Preset::Sync3band),
            "async3band" => Ok(Preset::Async3band),
            "link" => Ok(Preset::Link),
            other => Err(format!("unknown preset '{other}' (expected sync3band, async3band or link)")),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::Sync3band => "sync3band",
            Preset::Async3band => "async3band",
            Preset::Link => "link",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub eta: f64,
    pub modulation: usize,
    pub equalizer: EqualizerKind,
    pub receiver: ReceiverMode,
    pub symbol_power: f64,
    pub pdp_taps: usize,
    /// Power of the last tap below the first, in dB.
    pub pdp_decay_db: f64,
    pub pdp_file: Option<PathBuf>,
    pub pdp_normalize: bool,
    pub filter_file: Option<PathBuf>,
    pub snr_db: Vec<f64>,
    pub seed: u64,
    pub preset: Preset,
    pub blocks: usize,
    pub symbols: usize,
    pub overlap_blocks: bool,
    pub coded: bool,
    pub soft_decoding: bool,
    /// Neighbour offset for the async preset, as a fraction of a symbol interval.
    pub offset: f64,
    /// OFDM cyclic prefix; `None` picks the smallest fraction of N covering the channel.
    pub cp_len: Option<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        let sys = SystemConfig::default();
        Self {
            n: sys.subcarriers,
            m: sys.symbols,
            k: sys.overlap,
            eta: sys.eta,
            modulation: sys.mod_order.order(),
            equalizer: sys.equalizer,
            receiver: sys.receiver,
            symbol_power: sys.symbol_power,
            pdp_taps: 8,
            pdp_decay_db: 20.0,
            pdp_file: None,
            pdp_normalize: false,
            filter_file: None,
            snr_db: (0..=8).map(|i| 4.0 + 2.0 * i as f64).collect(),
            seed: 1,
            preset: Preset::Sync3band,
            blocks: 4600,
            symbols: 100_000,
            overlap_blocks: false,
            coded: true,
            soft_decoding: true,
            offset: 0.5,
            cp_len: None,
        }
    }
}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("'{v}' is not a valid number"))
}

fn flag(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("'{v}' is not a boolean")),
    }
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or("none".into(), |p| p.display().to_string())
}

fn show_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Settings {
    /// Set one key. Unknown keys and malformed values are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "n" => self.n = num(v)?,
            "m" => self.m = num(v)?,
            "k" => self.k = num(v)?,
            "eta" => self.eta = num(v)?,
            "modulation" => self.modulation = num(v)?,
            "equalizer" => self.equalizer = v.parse()?,
            "receiver" => self.receiver = v.parse()?,
            "symbol_power" => self.symbol_power = num(v)?,
            "pdp_taps" => self.pdp_taps = num(v)?,
            "pdp_decay_db" => self.pdp_decay_db = num(v)?,
            "pdp_file" => self.pdp_file = path(v),
            "pdp_normalize" => self.pdp_normalize = flag(v)?,
            "filter_file" => self.filter_file = path(v),
            "snr_db" => {
                self.snr_db = v.split(',').map(|s| num(s.trim())).collect::<Result<_, _>>()?;
            }
            "seed" => self.seed = num(v)?,
            "preset" => self.preset = Preset::parse(v)?,
            "blocks" => self.blocks = num(v)?,
            "symbols" => self.symbols = num(v)?,
            "overlap_blocks" => self.overlap_blocks = flag(v)?,
            "coded" => self.coded = flag(v)?,
            "soft_decoding" => self.soft_decoding = flag(v)?,
            "offset" => self.offset = num(v)?,
            "cp_len" => self.cp_len = if v == "auto" { None } else { Some(num(v)?) },
            k if MANIFEST_KEYS.contains(&k) => {}
            k => return Err(format!("unknown key '{k}'")),
        }
        Ok(())
    }

    /// Apply `key = value` lines; `#` starts a comment. Every bad line is reported.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(format!("{origin}:{}: expected 'key = value'", i + 1));
                continue;
            };
            if let Err(e) = self.set(k, v) {
                errors.push(format!("{origin}:{}: {e}", i + 1));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            bail!("{}", errors.join("\n"))
        }
    }

    pub fn apply_file(&mut self, file: &Path) -> Result<()> {
        let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
        self.apply_text(&text, &file.display().to_string())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("n", self.n.to_string()),
            ("m", self.m.to_string()),
            ("k", self.k.to_string()),
            ("eta", self.eta.to_string()),
            ("modulation", self.modulation.to_string()),
            ("equalizer", self.equalizer.to_string()),
            ("receiver", self.receiver.to_string()),
            ("symbol_power", self.symbol_power.to_string()),
            ("pdp_taps", self.pdp_taps.to_string()),
            ("pdp_decay_db", self.pdp_decay_db.to_string()),
            ("pdp_file", show_path(&self.pdp_file)),
            ("pdp_normalize", self.pdp_normalize.to_string()),
            ("filter_file", show_path(&self.filter_file)),
            ("snr_db", show_list(&self.snr_db)),
            ("seed", self.seed.to_string()),
            ("preset", self.preset.name().to_string()),
            ("blocks", self.blocks.to_string()),
            ("symbols", self.symbols.to_string()),
            ("overlap_blocks", self.overlap_blocks.to_string()),
            ("coded", self.coded.to_string()),
            ("soft_decoding", self.soft_decoding.to_string()),
            ("offset", self.offset.to_string()),
            ("cp_len", self.cp_len.map_or("auto".into(), |c| c.to_string())),
        ]
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Validated system parameters; every violation is listed.
    pub fn system(&self) -> Result<SystemConfig> {
        let mut errors = Vec::new();
        let mod_order = ModOrder::from_order(self.modulation).map_err(|e| errors.push(e.to_string())).ok();
        let sys = SystemConfig {
            subcarriers: self.n,
            symbols: self.m,
            overlap: self.k,
            symbol_power: self.symbol_power,
            mod_order: mod_order.unwrap_or(ModOrder::Qam16),
            eta: self.eta,
            equalizer: self.equalizer,
            receiver: self.receiver,
        };
        errors.extend(sys.violations());
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            errors.push("snr_db values must be finite".into());
        }
        if !(0.0..1.0).contains(&self.offset) {
            errors.push(format!("offset {} must lie in [0, 1)", self.offset));
        }
        if errors.is_empty() {
            Ok(sys)
        } else {
            bail!("invalid configuration:\n  {}", errors.join("\n  "))
        }
    }

    pub fn prototype(&self) -> Result<PrototypeFilter> {
        Ok(match &self.filter_file {
            Some(f) => {
                let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
                PrototypeFilter::parse(&text, self.k, self.n)?
            }
            None => PrototypeFilter::design(self.k, self.n)?,
        })
    }

    pub fn pdp(&self) -> Result<PowerDelayProfile> {
        Ok(match &self.pdp_file {
            Some(f) => {
                let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
                PowerDelayProfile::parse(&text, self.pdp_normalize)?
            }
            None => PowerDelayProfile::exponential(self.pdp_taps, self.pdp_decay_db)?,
        })
    }
}
