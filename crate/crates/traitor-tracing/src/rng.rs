//! Deterministic stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose seed is
//! derived from a master seed plus a list of tags (purpose, trial index,
//! position, ...). Derivation is a fixed integer mix, so streams are
//! identical across platforms and independent of execution order or worker
//! count: trial 17 sees the same stream whether it runs first, last, or on
//! another thread.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for the major stream families. Values are arbitrary but
/// fixed forever; changing one changes every artifact generated from a seed.
pub mod purpose {
    pub const BIAS: u64 = 0x01;
    pub const FINGERPRINTS: u64 = 0x02;
    pub const CHANNEL: u64 = 0x03;
    pub const QUERY_ORDER: u64 = 0x04;
    pub const COLLUSION_SAMPLE: u64 = 0x05;
    pub const ESTIMATION: u64 = 0x06;
    pub const INNOCENT_MODEL: u64 = 0x07;
    pub const WHITEBOX_SECRET: u64 = 0x08;
    pub const WHITEBOX_BASIS: u64 = 0x09;
    pub const WHITEBOX_WEIGHTS: u64 = 0x0a;
    pub const WHITEBOX_ATTACK: u64 = 0x0b;
    pub const TRIAL: u64 = 0x0c;
    pub const SKEW_LABELS: u64 = 0x0d;
}

/// SplitMix64 finalizer. Standard constants from Steele et al.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a substream seed from a master seed and a tag path.
///
/// `derive_seed(s, &[a, b])` differs from `derive_seed(s, &[b, a])`: the
/// tags are folded in order, so (purpose, trial, ...) paths never collide
/// with reordered ones in practice.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = mix(master);
    for &t in tags {
        state = mix(state ^ mix(t));
    }
    state
}

/// A ChaCha8 generator for the given substream.
pub fn substream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tags))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible() {
        let mut a = substream(42, &[purpose::BIAS, 7]);
        let mut b = substream(42, &[purpose::BIAS, 7]);
        for _ in 0..16 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn tag_order_matters() {
        assert_ne!(derive_seed(42, &[1, 2]), derive_seed(42, &[2, 1]));
        assert_ne!(
            derive_seed(42, &[purpose::BIAS]),
            derive_seed(42, &[purpose::FINGERPRINTS])
        );
        assert_ne!(derive_seed(42, &[]), derive_seed(43, &[]));
    }

    #[test]
    fn neighbouring_trials_decorrelate() {
        // Not a statistical test, just a guard against an accidental
        // identity mapping in the mixer.
        let a = derive_seed(0, &[purpose::TRIAL, 0]);
        let b = derive_seed(0, &[purpose::TRIAL, 1]);
        assert_ne!(a ^ b, 0);
        assert!((a ^ b).count_ones() > 8);
    }
}
