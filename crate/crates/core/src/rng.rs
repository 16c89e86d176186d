//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha stream derived from
//! the scenario seed, so adding draws in one component never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream ids used by the simulator.
pub mod streams {
    pub const WIRELESS: u64 = 1;
    pub const LINE_RESISTANCE: u64 = 2;
    pub const BER: u64 = 3;
    /// ADC sampler of unit `i` uses `SAMPLER_BASE + i`.
    pub const SAMPLER_BASE: u64 = 1_000;
}

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
