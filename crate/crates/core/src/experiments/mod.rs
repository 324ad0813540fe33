//! Monte Carlo engine.
//!
//! Trials are cut into fixed-size chunks evaluated in parallel. Each block
//! draws from its own substreams and chunk partials are merged in chunk
//! order, so a `(config, trials, seed)` triple yields the same bits whatever
//! the worker count.

mod estimate;
pub mod figures;
mod montecarlo;
mod sweep;

pub use estimate::{Estimate, RateEstimate, RunningStats};
pub use montecarlo::{
    mc_dynamic_gain, mc_effective_gain, mc_gain_over_power, mc_moment_oracle, mc_power_oracle, mc_sum_rate,
    mc_sum_rate_over_power, sample_block, ChannelModel, McGain, MomentEstimates,
};
pub use sweep::{sweep, Evaluator, SweepAxis, SweepRow, SweepSpec, SweepTable, SweepTarget};

use std::ops::Range;

use rayon::prelude::*;

use crate::error::Result;

/// Trials per work unit. Fixed so chunk boundaries never depend on the pool.
pub const CHUNK: u64 = 1024;

pub const DEFAULT_RATE_TRIALS: u64 = 100_000;
pub const DEFAULT_MOMENT_TRIALS: u64 = 1_000_000;

/// Evaluate `f` over consecutive trial ranges and return the partials in
/// range order.
pub(crate) fn run_chunks<T, F>(trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(trials)))
        .collect()
}

/// Run `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
