//! Seed derivation. Every consumer of randomness in a trial gets its own
//! ChaCha stream derived from the trial seed, so adding draws in one place
//! never shifts the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named sub-streams of a trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Weights = 1,
    Faults = 2,
    Split = 3,
    Encoder = 4,
    Order = 5,
}

pub fn stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Generator for an indexed item within a stream (e.g. one sample's encoding).
pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(seed ^ splitmix64(index.wrapping_add(0x9E37_79B9)));
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(stream as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
