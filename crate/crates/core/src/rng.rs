//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is
//! derived from a seed root plus a path of labels (battery id, task id, ...)
//! and whose stream number is the replicate index. A draw therefore depends
//! only on *what* it is for, never on evaluation order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0100_0000_01b3;

/// FNV-1a over raw bytes. Stable across platforms and runs.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hierarchical key for a family of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed_root: u64) -> Self {
        StreamKey(mix64(seed_root))
    }

    /// Extends the key with a string label.
    #[must_use]
    pub fn with_str(self, label: &str) -> Self {
        // length-prefix so ("ab","c") and ("a","bc") differ
        let len = mix64(label.len() as u64);
        StreamKey(mix64(
            self.0 ^ len ^ fnv1a64(label.as_bytes()).rotate_left(17),
        ))
    }

    /// Extends the key with an integer label.
    #[must_use]
    pub fn with_u64(self, label: u64) -> Self {
        StreamKey(mix64(
            self.0.rotate_left(29) ^ mix64(label ^ 0x5851_f42d_4c95_7f2d),
        ))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    /// The stream for one replicate (counter) under this key.
    pub fn rng(self, index: u64) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        let mut s = self.0;
        for chunk in seed.chunks_exact_mut(8) {
            s = mix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}
