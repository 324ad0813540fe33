//! Vector coded caching over multi-beam satellite downlinks.
//!
//! - [`channel`]: Rician-shadowed channel sampling, CSIT error, the
//!   dynamic LOS/NLOS coverage model.
//! - [`caching`]: cache placement and the stage/round delivery schedule.
//! - [`linkphy`]: MF precoding, SINR and effective sum rate of one block.
//! - [`analysis`]: closed-form moments, sum rate and effective gain.
//! - [`experiments`]: deterministic Monte Carlo estimation, sweeps, figure data.

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod caching;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod linkphy;
pub mod rng;

pub use error::{Error, Result};

/// Crate version, embedded in emitted result files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
