//! Multimodal click forecasting primitives.
//!
//! This crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! toolkit: campaign data modelling and windowing, the synthetic campaign
//! generator, prompt rendering, the composite response reward, group-relative
//! policy optimisation, the hermetic text embedder, the numeric + text fusion
//! forecaster and the evaluation metrics. File formats, network adapters and
//! the command line live in the `clickcast` crate.
//!
//! Enable the `std` feature to let the matrix kernels use runtime CPU feature
//! detection.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod forecaster;
pub mod grpo;
pub mod prompt;
pub mod reward;
pub mod rng;
pub mod summarize;
pub mod synth;

pub use error::{Error, Result};

/// Lookback window used throughout the forecasting experiments.
pub const DEFAULT_LOOKBACK: usize = 14;
/// Forecasting horizon used throughout the forecasting experiments.
pub const DEFAULT_HORIZON: usize = 5;
/// Fusion weight applied to the text branch.
pub const DEFAULT_ALPHA: f64 = 0.5;
