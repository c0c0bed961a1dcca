//! Deterministic seed derivation for parallel work units.
//!
//! Every parallel unit (forest tree, CV fold) gets its own seed derived from
//! the master seed and its stream index, so results do not depend on thread
//! scheduling or worker count.

/// SplitMix64 mixing function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `stream` under `master`: `master XOR splitmix64(stream)`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    master ^ splitmix64(stream)
}
