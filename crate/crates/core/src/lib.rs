//! Simulation and key-distillation toolkit for entanglement-based
//! continuous-variable QKD.
//!
//! The crate is split along the pipeline:
//!
//! - [`source`]: EPR source model, lossy channel with an optional
//!   beam-splitter tap, homodyne basis timing and channel calibration.
//! - [`security`] and [`wigner`]: per-point error rate, mutual information,
//!   Holevo bound and individual-attack information, post-selection
//!   boundaries and ensemble averages.
//! - [`distill`]: sifting, post-selection, binary encoding, Cascade,
//!   Toeplitz privacy amplification and stage accounting.
//! - [`session`]: Alice and Bob as message-driven state machines over a
//!   framed wire protocol.
//! - [`config`]: the `key = value` run configuration.
//!
//! All quadratures are in shot-noise units (vacuum variance = 1).

pub mod config;
pub mod distill;
pub mod error;
pub mod rng;
pub mod security;
pub mod session;
pub mod source;
pub mod wigner;

pub use error::{Error, Result};
