//! Seeded random streams. Each consumer draws from its own named stream so that
//! adding or removing draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Graph = 1,
    Split = 2,
    Init = 3,
    TaskBatch = 4,
    AdversaryBatch = 5,
    Probe = 6,
    Sampler = 7,
    Theory = 8,
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Sub-stream for the `index`-th independent job under one seed.
pub fn substream(seed: u64, which: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(which as u64);
    rng
}
