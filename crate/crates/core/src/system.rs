//! System-level parameters shared by every stage of the chain.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One-tap equalizer flavour. `Zf` corresponds to ν = 0, `Mmse` to ν = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EqualizerKind {
    Zf,
    Mmse,
}

impl EqualizerKind {
    /// Regularization weight ν applied to σ²/δ².
    pub fn nu(self) -> f64 {
        match self {
            EqualizerKind::Zf => 0.0,
            EqualizerKind::Mmse => 1.0,
        }
    }
}

impl fmt::Display for EqualizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EqualizerKind::Zf => "zf",
            EqualizerKind::Mmse => "mmse",
        })
    }
}

impl FromStr for EqualizerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "zf" => Ok(EqualizerKind::Zf),
            "mmse" => Ok(EqualizerKind::Mmse),
            other => Err(format!("unknown equalizer '{other}' (expected zf or mmse)")),
        }
    }
}

/// Receiver structure: plain matched filter bank (`Nif`) or matched filter
/// followed by the inverse autocorrelation filter (`If`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverMode {
    Nif,
    If,
}

impl fmt::Display for ReceiverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReceiverMode::Nif => "nif",
            ReceiverMode::If => "if",
        })
    }
}

impl FromStr for ReceiverMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nif" => Ok(ReceiverMode::Nif),
            "if" => Ok(ReceiverMode::If),
            other => Err(format!("unknown receiver mode '{other}' (expected nif or if)")),
        }
    }
}

/// Square QAM constellation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModOrder {
    Qam4,
    Qam16,
    Qam64,
}

impl ModOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            4 => Ok(ModOrder::Qam4),
            16 => Ok(ModOrder::Qam16),
            64 => Ok(ModOrder::Qam64),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }

    pub fn order(self) -> usize {
        match self {
            ModOrder::Qam4 => 4,
            ModOrder::Qam16 => 16,
            ModOrder::Qam64 => 64,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        self.order().trailing_zeros() as usize
    }
}

impl fmt::Display for ModOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order())
    }
}

/// Block dimensions and receiver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// N, number of subcarriers (power of two).
    pub subcarriers: usize,
    /// M, FBMC symbols per block.
    pub symbols: usize,
    /// K, prototype overlap factor.
    pub overlap: usize,
    /// δ², mean QAM symbol power (linear).
    pub symbol_power: f64,
    pub mod_order: ModOrder,
    /// η, fraction of the middle off-diagonal entries of R that are dropped.
    pub eta: f64,
    pub equalizer: EqualizerKind,
    pub receiver: ReceiverMode,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            subcarriers: 64,
            symbols: 14,
            overlap: 5,
            symbol_power: 1.0,
            mod_order: ModOrder::Qam16,
            eta: 0.0,
            equalizer: EqualizerKind::Mmse,
            receiver: ReceiverMode::If,
        }
    }
}

impl SystemConfig {
    /// Samples per transmitted block, (M + K − 1)·N.
    pub fn block_len(&self) -> usize {
        (self.symbols + self.overlap - 1) * self.subcarriers
    }

    /// Number of QAM symbols per block, M·N.
    pub fn symbols_per_block(&self) -> usize {
        self.symbols * self.subcarriers
    }

    /// Collects every violated field instead of stopping at the first one.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.subcarriers.is_power_of_two() || self.subcarriers < 2 {
            out.push(format!("n = {} must be a power of two >= 2", self.subcarriers));
        }
        if self.symbols == 0 {
            out.push("m must be at least 1".to_string());
        }
        if !(1..=8).contains(&self.overlap) {
            out.push(format!("k = {} must lie in 1..=8", self.overlap));
        }
        if !(self.symbol_power.is_finite() && self.symbol_power > 0.0) {
            out.push(format!("symbol_power = {} must be positive", self.symbol_power));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            out.push(format!("eta = {} must lie in [0, 1]", self.eta));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }

    /// Checks the N ≥ 2·L requirement for a channel of `taps` taps.
    pub fn check_channel_len(&self, taps: usize) -> Result<()> {
        if self.subcarriers < 2 * taps {
            return Err(Error::InvalidConfig(vec![format!(
                "n = {} must be at least twice the channel length {}",
                self.subcarriers, taps
            )]));
        }
        Ok(())
    }
}
