//! Seeded random streams.
//!
//! Every Monte Carlo run owns a ChaCha8 stream selected by `(seed, index)`.
//! ChaCha's stream id is part of the cipher nonce, so streams with the same
//! seed and different indices never overlap, and a run's draws do not depend
//! on which thread executes it or in which order runs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream number `index` of `seed`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A second-level seed for a named sub-experiment, so that e.g. the random
/// Hamiltonian of a universe and the runs that use it draw from unrelated
/// streams.
pub fn derive_seed(seed: u64, domain: &str) -> u64 {
    // FNV-1a over the domain tag, mixed with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in domain.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix(seed ^ h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
