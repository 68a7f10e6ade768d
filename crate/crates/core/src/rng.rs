//! Seedable, splittable random streams.
//!
//! Every run draws from a ChaCha8 generator keyed by a 64-bit seed. Independent
//! streams under one seed are selected with ChaCha's 64-bit stream id, so a
//! trial is identified by `(seed, stream)` and can be re-run on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by every sampler.
pub type SimRng = ChaCha8Rng;

/// Name recorded in reports.
pub const GENERATOR_NAME: &str = "ChaCha8";

/// Stream 0 of `seed`.
pub fn seeded(seed: u64) -> SimRng {
    stream(seed, 0)
}

/// Independent stream `id` under `seed`.
pub fn stream(seed: u64, id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// SplitMix64 finalizer; used to derive sub-seeds from labelled counters.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for a labelled component of an experiment.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let mut h = mix(master);
    for b in label.bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ index)
}
