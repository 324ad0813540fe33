//! Reproducible random substreams.
//!
//! A single master seed is expanded into independent ChaCha streams, one per
//! `(block, unit)` pair. Every draw a trial makes comes from its own
//! substream, so results do not depend on which worker evaluates the trial or
//! in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator handed to every sampling routine.
pub type SimRng = ChaCha8Rng;

/// Units per block addressable by [`substream`]. Users per block never come
/// close (G·Q ≤ 100).
pub const UNITS_PER_BLOCK: u64 = 1 << 16;

/// Expand a master seed into a 256-bit ChaCha key (SplitMix64 expansion).
fn expand_seed(master: u64) -> [u8; 32] {
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    key
}

/// Independent stream for unit `unit` (a user, typically) of block `block`.
pub fn substream(master: u64, block: u64, unit: u64) -> SimRng {
    debug_assert!(unit < UNITS_PER_BLOCK);
    let mut rng = ChaCha8Rng::from_seed(expand_seed(master));
    rng.set_stream(block.wrapping_mul(UNITS_PER_BLOCK).wrapping_add(unit));
    rng
}

/// A plain stream keyed by the master seed, for callers that do not need
/// block/unit addressing.
pub fn seeded(master: u64) -> SimRng {
    ChaCha8Rng::from_seed(expand_seed(master))
}
