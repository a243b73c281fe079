//! Deterministic random streams.
//!
//! Every parallel unit of work (a chain, a sample block, a restart) draws from
//! its own ChaCha stream keyed by `(seed, stream id)`, so results never depend
//! on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent generator for substream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Substream for a nested index, e.g. (chain, block).
pub fn substream2(seed: u64, outer: u64, inner: u64) -> Rng {
    substream(seed, outer.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ inner)
}
