//! Seeded randomness.
//!
//! Edge uniforms come from ChaCha8 with key `seed` and stream `trial`; the
//! `i`-th `u64` of the stream drives edge `i` of a window, converted to a
//! uniform in `[0, 1)` by keeping its top 53 bits. An edge is open iff its
//! uniform is `< p`, which couples all values of `p`.
//!
//! Walks use the same key with the two reserved streams [`FORWARD_STREAM`]
//! and [`BACKWARD_STREAM`]. Processes on infinite trees are evaluated lazily
//! through SipHash-1-3 keyed by `(seed, tag)` over a vertex address.

use std::hash::Hasher;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use siphasher::sip::SipHasher13;

use crate::graphs::Address;

pub const FORWARD_STREAM: u64 = u64::MAX;
pub const BACKWARD_STREAM: u64 = u64::MAX - 1;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn next_unit(rng: &mut impl RngCore) -> f64 {
    unit(rng.next_u64())
}

/// Independent key for sub-experiment `index` of a run keyed by `seed`.
pub fn derive(seed: u64, index: u64) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, DERIVE_TAG);
    h.write_u64(index);
    h.finish()
}

const DERIVE_TAG: u64 = 0x6465_7269_7665_6b79;

/// Per-edge uniforms of trial `trial` for `n_edges` edges.
pub fn edge_uniforms(seed: u64, trial: u64, n_edges: usize) -> Vec<f64> {
    let mut rng = stream(seed, trial);
    (0..n_edges).map(|_| next_unit(&mut rng)).collect()
}

/// Deterministic address-keyed randomness.
#[derive(Clone, Copy, Debug)]
pub struct KeyedHash {
    seed: u64,
    tag: u64,
}

impl KeyedHash {
    pub fn new(seed: u64, tag: u64) -> Self {
        KeyedHash { seed, tag }
    }

    pub fn word(&self, address: &Address, salt: u64) -> u64 {
        let mut words = Vec::with_capacity(16);
        address.key_words(&mut words);
        let mut h = SipHasher13::new_with_keys(self.seed, self.tag);
        h.write_u64(salt);
        for w in words {
            h.write_u64(w);
        }
        h.finish()
    }

    pub fn unit(&self, address: &Address, salt: u64) -> f64 {
        unit(self.word(address, salt))
    }

    /// Uniform index in `0..n` (`n` is small, the modulo bias is below 2^-50).
    pub fn index(&self, address: &Address, salt: u64, n: u32) -> u32 {
        (self.word(address, salt) % n as u64) as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(edge_uniforms(7, 3, 50), edge_uniforms(7, 3, 50));
        assert_ne!(edge_uniforms(7, 3, 50), edge_uniforms(7, 4, 50));
        assert!(edge_uniforms(1, 0, 1000)
            .iter()
            .all(|&u| (0.0..1.0).contains(&u)));
    }

    #[test]
    fn keyed_hash_depends_on_all_inputs() {
        let a = Address::Lattice(vec![1, 2]);
        let b = Address::Lattice(vec![2, 1]);
        let h = KeyedHash::new(5, 1);
        assert_eq!(h.word(&a, 0), h.word(&a, 0));
        assert_ne!(h.word(&a, 0), h.word(&b, 0));
        assert_ne!(h.word(&a, 0), h.word(&a, 1));
        assert_ne!(h.word(&a, 0), KeyedHash::new(5, 2).word(&a, 0));
    }

    #[test]
    fn unit_maps_extremes() {
        assert_eq!(unit(0), 0.0);
        assert!(unit(u64::MAX) < 1.0);
    }
}
