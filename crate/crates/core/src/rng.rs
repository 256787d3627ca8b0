//! Counter-based derivation of independent random substreams from one master
//! seed, so that every probabilistic result in a report is reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive the RNG for substream `tag` of `master`. Distinct tags give
/// statistically independent streams; the same (master, tag) pair always
/// yields the same stream.
pub fn substream(master: u64, tag: u64) -> ChaCha8Rng {
    let seed = splitmix64(master ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)));
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags used across the crate. Tags are spaced far apart so that
/// per-item offsets (restart or sample indices) never collide between sites.
pub mod tags {
    pub const FACE_RESTART: u64 = 1 << 32;
    pub const MEMBER_RESTART: u64 = 2 << 32;
    pub const PROBE_SAMPLE: u64 = 3 << 32;
    pub const GEN_PHASELIFT: u64 = 4 << 32;
    pub const GEN_PLANTED: u64 = 5 << 32;
    pub const GEN_SPARSE: u64 = 6 << 32;
}
