//! Agent-based market toolkit.
//!
//! The crate has two halves that share a deterministic RNG layer:
//!
//! * time-series analysis of daily index closes — returns, windowed
//!   volatility, detrending-moving-average (DMA) Hurst estimation, and a
//!   three-strategy (random / momentum / RSI-divergence) daily backtest;
//! * an avalanche simulator for communities of traders on small-world or
//!   scale-free networks, where OFC-style information redistribution produces
//!   herding cascades ("financial quakes"), plus the capital ledger and the
//!   heavy-tail fitting used to characterise avalanche-size and wealth
//!   distributions.
//!
//! Every stochastic component is seeded explicitly through [`rng`]; identical
//! seeds give bit-identical results.

pub mod backtest;
pub mod cli;
pub mod dma;
pub mod error;
pub mod fitstats;
pub mod netgen;
pub mod quake;
pub mod rng;
pub mod series;
pub mod strategy;
pub mod wealth;

pub use error::{Error, Result};
