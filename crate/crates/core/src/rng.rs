//! Deterministic random substreams.
//!
//! Every random draw in an episode comes from a generator keyed by
//! `(master seed, stream ids...)`, so results do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with an ordered list of stream identifiers.
pub fn derive_seed(master: u64, ids: &[u64]) -> u64 {
    ids.iter()
        .fold(splitmix64(master), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

pub fn substream(master: u64, ids: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(master, ids))
}
