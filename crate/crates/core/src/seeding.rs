//! Deterministic seed derivation.
//!
//! Every stochastic component in the crate draws from a `ChaCha12` stream
//! whose seed is derived from a user-facing base seed and one or more stream
//! indices. Derivation uses splitmix64 so that nearby bases or indices still
//! yield uncorrelated streams.

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` and a stream index.
pub fn derive(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream))
}

/// Derives a child seed from `base` and two stream indices.
pub fn derive2(base: u64, a: u64, b: u64) -> u64 {
    derive(derive(base, a), b)
}
