//! Deterministic coherence-minimizing codebooks for compressive mmWave
//! channel estimation with hybrid beamforming, and the Monte-Carlo harness
//! that evaluates them.
//!
//! Module map:
//! - [`numerics`]: complex matrices, DFT, Kronecker products, coherence
//! - [`channel`]: geometric ULA channels and angle dictionaries
//! - [`codebook`]: pilot/precoder/combiner codebooks and greedy ordering
//! - [`sensing`]: snapshot schedules, Φ and measurements
//! - [`estimator`]: OMP, reconstruction, NMSE
//! - [`harness`]: configuration, experiments and CLI plumbing

// `!(x >= 0.0)` checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod numerics;
pub mod sensing;

pub use error::{Error, Result};
