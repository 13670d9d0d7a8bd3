//! Counter-based hashing for reproducible, lazily materialized randomness.
//!
//! Every random quantity in the crate is a pure function of a 64-bit seed and
//! an integer key, so fields never need up-front allocation and independent
//! workers agree bit for bit.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub const fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash a seed together with a sequence of key words.
#[inline]
pub fn keyed(seed: u64, words: &[u64]) -> u64 {
    let mut h = mix(seed ^ GOLDEN);
    for &w in words {
        h = mix(h ^ mix(w.wrapping_add(GOLDEN)));
    }
    h
}

/// Map 64 random bits to a uniform double in `[0, 1)`.
#[inline]
pub fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed of the `index`-th Monte-Carlo sample drawn from `base`.
pub fn sample_seed(base: u64, index: u64) -> u64 {
    keyed(base, &[0x5341_4D50, index])
}

/// Derive a named sub-stream of seeds, e.g. disjoint calibration and test banks.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    keyed(base, &[0x4445_5249, tag])
}

/// Sequential SplitMix64 stream, for probe placement inside the core.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    pub fn next_f64(&mut self) -> f64 {
        unit(self.next_u64())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Index uniformly distributed in `0..n` (tiny modulo bias is irrelevant here).
    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
