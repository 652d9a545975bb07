//! Deterministic seed derivation.
//!
//! Every random draw in the crate comes from a ChaCha stream whose seed is
//! derived from a master seed plus a list of integer tags (sweep point,
//! trial index, slot index, restart index, ...). Derivation is pure, so any
//! unit of work can be executed in any order or on any thread and still
//! reproduce bit-identically.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Domain tags keep independent consumers of the same master seed from
/// colliding.
pub mod domain {
    pub const FRAMES: u64 = 0x66b7_1a52_9d3c_0001;
    pub const NOISE: u64 = 0x66b7_1a52_9d3c_0002;
    pub const ESTIMATOR: u64 = 0x66b7_1a52_9d3c_0003;
    pub const RESTART: u64 = 0x66b7_1a52_9d3c_0004;
    pub const SLOT: u64 = 0x66b7_1a52_9d3c_0005;
    pub const TRIAL: u64 = 0x66b7_1a52_9d3c_0006;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed with tags into a single 64-bit sub-seed.
pub fn derive_u64(master: u64, tags: &[u64]) -> u64 {
    let mut state = master ^ 0x51ed_2701_89ab_cdef;
    let mut acc = splitmix64(&mut state);
    for &t in tags {
        state ^= t;
        acc ^= splitmix64(&mut state);
    }
    acc
}

/// Construct a ChaCha12 generator from a master seed and tags.
pub fn rng(master: u64, tags: &[u64]) -> ChaCha12Rng {
    let base = derive_u64(master, tags);
    let mut state = base;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
