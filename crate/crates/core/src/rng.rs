//! Randomness plumbing: a splittable, replayable generator.
//!
//! Every stochastic routine in this crate draws from a [`StreamRng`] keyed by
//! a `(seed, stream)` pair. ChaCha keeps a 256-bit key plus a 64-bit stream
//! counter with documented independence between streams, so replicates can be
//! farmed out to threads without sharing generator state: replicate `i` uses
//! stream `base + i` and the merged result is independent of scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used throughout the crate. Identical `(seed, stream)`
/// pairs replay identical trajectories.
pub type StreamRng = ChaCha12Rng;

/// Build the generator for one `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
