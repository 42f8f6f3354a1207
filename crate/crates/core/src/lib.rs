//! Block FBMC/QAM transceiver models, interference analytics and
//! Monte-Carlo link simulation.

// Index loops mirror the subscripts of the underlying formulas.
#![allow(clippy::needless_range_loop)]

pub mod analytics;
pub mod channel;
pub mod dft;
pub mod error;
pub mod fec;
pub mod matrix;
pub mod prototype;
pub mod qam;
pub mod simulator;
pub mod system;
pub mod transceiver;

pub use error::{Error, Result};
pub use num_complex::Complex64;
