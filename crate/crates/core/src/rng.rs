//! Deterministic RNG stream derivation.
//!
//! All randomness flows from a single user-supplied 64-bit seed. Independent
//! streams (per suite, per replicate, per purpose) are derived by hashing the
//! seed together with a label path, so replicates can be generated in any
//! order, or in parallel, without sharing state.

use rand_pcg::Pcg64Mcg;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a generator from a base seed and a label path.
///
/// Identical `(seed, labels)` always yields an identical stream; streams with
/// different labels are statistically independent.
pub fn derive_rng(seed: u64, labels: &[u64]) -> Pcg64Mcg {
    let mut state = seed ^ 0x6a09_e667_f3bc_c908;
    let mut key = splitmix64(&mut state);
    for &label in labels {
        state ^= label.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        key = splitmix64(&mut state) ^ key.rotate_left(23);
    }
    let lo = key as u128;
    let hi = splitmix64(&mut state) as u128;
    Pcg64Mcg::new((hi << 64) | lo | 1)
}
