//! Deterministic derivation of child seeds from a master seed.
//!
//! Training episodes, dataset instances and evaluation runs each get their
//! own stream seed computed from structured coordinates (iteration, episode
//! index, …), so results never depend on scheduling order or thread count.

/// Mixes a sequence of words into one well-scrambled seed using the
/// splitmix64 finalizer per word. Same input, same output, on every
/// platform.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
