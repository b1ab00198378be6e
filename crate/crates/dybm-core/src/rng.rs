//! Seeded RNG construction. Every stochastic path in the library takes its
//! randomness from here so that a run is reproducible from a single u64 seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type Rng = ChaCha12Rng;

/// Stream ids keep independent concerns (init, sampling, training noise)
/// statistically decoupled while still being derived from the one user seed.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const SAMPLE: u64 = 3;
    pub const DATA: u64 = 4;
}

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
