//! Counter-based seeding.
//!
//! Every random object is drawn from its own ChaCha8 stream, keyed by a
//! base seed and an index, so datasets and feature draws are reproducible
//! regardless of generation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent seed for a named purpose (e.g. `"train"`, `"theta"`).
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = splitmix(seed ^ 0x6a09_e667_f3bc_c908);
    for b in label.bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    h
}

/// Generator for the `index`-th object drawn under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
