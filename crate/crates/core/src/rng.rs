//! Counter-based random substreams.
//!
//! Every simulated path owns the ChaCha stream selected by its index, so the
//! draws a path sees do not depend on how paths are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for path number `path` under the experiment seed `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Mixes a tag (start state, experiment block, …) into a seed with SplitMix64.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
