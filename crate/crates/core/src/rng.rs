//! Seed derivation.
//!
//! Every replication is driven by one master seed. Independent ChaCha streams
//! are carved out of it per purpose so that, for example, changing the Exp3
//! arm draws never perturbs the demand path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of a random stream derived from a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Demand = 1,
    Instance = 2,
    Policy = 3,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Derive the per-replication seed for replication `index` of a run.
///
/// SplitMix64 finalizer over the master seed and index; stable across
/// platforms and releases.
pub fn replication_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
