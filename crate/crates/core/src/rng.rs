//! Named, pre-split random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by
//! `(seed, purpose, round, index)`, so the order in which devices or
//! parameter blocks are processed never changes the numbers they see.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Init = 1,
    Shard = 2,
    LocalTrain = 3,
    ChannelNoise = 4,
    Dataset = 5,
    Papr = 6,
    Trial = 7,
}

/// `round` must fit in 24 bits and `index` in 32.
pub fn stream(seed: u64, purpose: Purpose, round: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(round < 1 << 24);
    debug_assert!(index <= u32::MAX as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | (round << 32) | index);
    rng
}
