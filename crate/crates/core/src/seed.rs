//! Deterministic derivation of independent sub-seeds from one base seed.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-task `tag` of a run seeded with `base`.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    mix(base ^ mix(tag))
}
