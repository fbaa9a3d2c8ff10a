//! Bit-accurate behavioral simulator and training engine for an event-driven
//! convolutional neural accelerator: latency-coded input events, a 10-kernel
//! saturating convolution core, quantized fully-connected layers, and an
//! on-chip online-learning engine built on random target projection with
//! LFSR-driven stochastic weight updates.

// The numeric kernels deliberately use index loops that mirror the
// hardware's row/column/lane addressing instead of iterator chains.
#![allow(clippy::needless_range_loop)]

pub mod archive;
pub mod config;
pub mod conv;
pub mod data;
pub mod drtp;
pub mod dvs;
pub mod error;
pub mod event;
pub mod fc;
pub mod net;
pub mod oracle;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
pub use net::NetworkWeights;
