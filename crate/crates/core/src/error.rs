use thiserror::Error;

/// Errors raised by the waveform, matrix, channel and simulation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported overlap factor K={0}; supported values are 1, 2, 3, 4, 5, 6, 7, 8")]
    UnsupportedOverlap(usize),

    #[error("subcarrier count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("bit count {bits} is not a multiple of {per_symbol} bits per symbol")]
    BitAlignment { bits: usize, per_symbol: usize },

    #[error("unsupported modulation order {0}; supported orders are 4, 16, 64")]
    UnsupportedOrder(usize),

    #[error("autocorrelation system at subcarrier index {index} is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { index: usize, condition: f64 },

    #[error("eta = {0} lies outside [0, 1]")]
    EtaOutOfRange(f64),

    #[error("channel delay {delay} must be smaller than N = {subcarriers}")]
    DelayTooLarge { delay: usize, subcarriers: usize },

    #[error("zero-forcing equalizer undefined: channel null at subcarrier {0}")]
    SpectralNull(usize),

    #[error("invalid power delay profile: {0}")]
    InvalidProfile(String),

    #[error("invalid prototype filter: {0}")]
    InvalidFilter(String),

    #[error("coded stream length {0} is malformed (must be even and at least 14)")]
    CodedLength(usize),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
