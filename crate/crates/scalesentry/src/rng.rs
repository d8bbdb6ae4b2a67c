//! Deterministic randomness: a SplitMix64 stream generator plus a splittable
//! seed-derivation scheme so every module's random stream is attributable to
//! the run's master seed.
//!
//! Derivation scheme: `derive(parent, stream)` mixes a stream tag into a
//! parent seed. The harness derives one seed per repetition from the master
//! seed, and each module derives its own stream from the repetition seed
//! using the `STREAM_*` tags below. Stateless draws (per-request jitter,
//! per-line corruption) use `hash2`, keyed by an index instead of stream
//! position, so independently written reference simulations can reproduce
//! them without replaying draw order.

/// Stream tag for IP pool generation.
pub const STREAM_IP_POOL: u64 = 1;
/// Stream tag for the request event stream.
pub const STREAM_TRAFFIC: u64 = 2;
/// Stream tag for per-request queue patience jitter.
pub const STREAM_PATIENCE: u64 = 3;
/// Stream tag for access-log corruption.
pub const STREAM_CORRUPTION: u64 = 4;
/// Stream tag for the train/test shuffle.
pub const STREAM_SHUFFLE: u64 = 5;
/// Base stream tag for per-tree bootstrap streams; tree `i` uses `STREAM_TREE_BASE + i`.
pub const STREAM_TREE_BASE: u64 = 1000;

const PHI: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer. Full-avalanche mix of a 64-bit word.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a stream tag.
#[inline]
pub fn derive(parent: u64, stream: u64) -> u64 {
    mix(parent ^ mix(stream.wrapping_add(PHI)))
}

/// Stateless keyed hash of two indices under a seed.
#[inline]
pub fn hash2(seed: u64, a: u64, b: u64) -> u64 {
    let h = mix(seed.wrapping_add(PHI));
    let h = mix(h ^ a.wrapping_mul(0xA076_1D64_78BD_642F));
    mix(h ^ b.wrapping_mul(0xE703_7ED1_A0B4_28DB))
}

/// Maps a hash to a float in `[0, 1)`.
#[inline]
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(PHI);
        mix(self.state)
    }

    /// Uniform float in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform integer in `[0, span)`. Modulo bias is negligible for the
    /// spans used here (all well below 2^32).
    #[inline]
    pub fn next_below(&mut self, span: u64) -> u64 {
        debug_assert!(span > 0);
        self.next_u64() % span
    }

    /// Uniform integer in `[lo, hi]`.
    #[inline]
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.next_below(hi - lo + 1)
    }

    /// Bernoulli draw with probability `p`.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
