use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `stream`-th independent substream of `seed`.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix64(seed.wrapping_add(mix64(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15))))
}

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}
