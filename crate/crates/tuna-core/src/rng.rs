//! Deterministic hashing and pseudo-random generation.
//!
//! Every stochastic choice in the crate (stub embeddings, k-means seeding,
//! random-tag sampling, seeded parameter init) flows through the generators
//! here so that identical inputs produce identical bytes on every platform.
//!
//! Constants:
//! - FNV-1a 64-bit: offset basis `0xcbf29ce484222325`, prime `0x100000001b3`.
//! - SplitMix64: increment `0x9e3779b97f4a7c15`, mixers `0xbf58476d1ce4e5b9`
//!   and `0x94d049bb133111eb` (Steele, Lea & Flood 2014).
//! - xorshift64*: shifts 12/25/27, multiplier `0x2545f4914f6cdd1d`
//!   (Vigna 2014).

/// FNV-1a 64-bit hash.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// One SplitMix64 step: advances `state` and returns the mixed output.
pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// xorshift64* generator. State is never zero: seeds pass through SplitMix64
/// first, and a zero mix result falls back to the SplitMix64 increment.
#[derive(Debug, Clone)]
pub(crate) struct XorShift64Star {
    state: u64,
}

impl XorShift64Star {
    pub(crate) fn new(seed: u64) -> Self {
        let mut s = seed;
        let mixed = splitmix64(&mut s);
        Self {
            state: if mixed == 0 { 0x9e37_79b9_7f4a_7c15 } else { mixed },
        }
    }

    pub(crate) fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub(crate) fn next_unit_f64(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform draw in [-1, 1).
    pub(crate) fn next_symmetric_f64(&mut self) -> f64 {
        2.0 * self.next_unit_f64() - 1.0
    }

    /// Uniform index in [0, bound) via rejection sampling (no modulo bias).
    pub(crate) fn next_index(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "next_index bound must be positive");
        let bound = bound as u64;
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % bound) as usize;
            }
        }
    }
}

/// Samples `m` distinct indices from `0..n` by a partial Fisher-Yates shuffle.
/// Panics if `m > n`.
pub(crate) fn sample_indices(rng: &mut XorShift64Star, n: usize, m: usize) -> Vec<usize> {
    assert!(m <= n, "cannot sample {m} distinct indices from {n}");
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.next_index(n - i);
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}
