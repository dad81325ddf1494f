//! Deterministic seed derivation for the verification suites.
//!
//! Every randomized instance descends from the config seed through
//! `child_seed`, so a run is reproducible bit-for-bit from `(config, seed)`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive a child seed from a base seed, a string label and a counter.
pub fn child_seed(base: u64, label: &str, counter: u64) -> u64 {
    splitmix64(splitmix64(base ^ fnv1a(label)).wrapping_add(counter))
}

/// The RNG used throughout the suites.
pub fn rng_from(base: u64, label: &str, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(base, label, counter))
}

/// Complex number with real and imaginary parts uniform in [-1, 1).
pub fn random_c64(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_are_stable_and_distinct() {
        let a = child_seed(7, "suite", 0);
        assert_eq!(a, child_seed(7, "suite", 0));
        assert_ne!(a, child_seed(7, "suite", 1));
        assert_ne!(a, child_seed(7, "other", 0));
        assert_ne!(a, child_seed(8, "suite", 0));
    }
}
