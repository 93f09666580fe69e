//! Wideband hybrid beamforming with switch-based analog networks.
//!
//! The crate covers the OFDM channel model, beam-squint analytics, the
//! beamforming objectives, combinatorial analog solvers and a Monte Carlo
//! experiment harness.

pub mod beamform;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod quadrature;
pub mod rng;
pub mod solvers;
pub mod squint;

pub use channel::{generate_channel, ChannelRealization, PathSet, SystemConfig};
pub use error::{HbfError, Result};
