//! Counter-based randomness.
//!
//! Environment sites are generated by hashing `(seed, site, sub-stream)`
//! so any window can be regenerated in any order. Simulation replicas use
//! ChaCha8 with one stream per replica index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of a seed with two counters.
#[inline]
pub fn hash3(seed: u64, a: u64, b: u64) -> u64 {
    mix64(mix64(mix64(seed) ^ a) ^ b.wrapping_mul(GOLDEN))
}

/// Map 64 random bits to the open interval (0, 1).
#[inline]
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Uniform (0,1) value attached to lattice site `x` on sub-stream `stream`.
#[inline]
pub fn site_uniform(seed: u64, x: i64, stream: u64) -> f64 {
    open01(hash3(seed, x as u64, stream))
}

/// Seed derived from a master seed, a purpose tag and an index.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    hash3(master ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93), index, tag)
}

/// Independent generator for replica `index` under `master`.
pub fn replica_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Purpose tags for [`derive_seed`].
pub mod tags {
    pub const ENVIRONMENT: u64 = 1;
    pub const WALK: u64 = 2;
    pub const PLANT: u64 = 3;
    pub const TRIAL: u64 = 4;
}
