//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`ChaCha8Rng`] (the ChaCha stream
//! cipher with 8 rounds, from `rand_chacha`). It is portable: identical seeds
//! give identical streams on every platform. Independent consumers derive
//! their own stream from the user seed and a fixed [`Stream`] tag, so adding
//! draws in one stage never shifts another stage's sequence.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Stream tags for the stages that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Split = 1,
    Smote = 2,
    Adasyn = 3,
    Init = 4,
    Shuffle = 5,
    Dropout = 6,
    SynthEvent = 7,
    SynthFeatures = 8,
}

/// Generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for item `index` of `stream` (e.g. one synthetic event).
pub fn indexed_stream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream as u64);
    rng
}
