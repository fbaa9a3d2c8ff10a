//! The simulator's documented PRNG.
//!
//! Every randomized initialization (kernels, binary feedback matrix, data
//! shuffling, synthetic recordings) draws from SplitMix64 so that a seed
//! pins the full bit pattern across platforms and versions.

/// SplitMix64 (Steele et al.). State advances by the golden-gamma constant;
/// output is the finalized mix of the new state.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in `0..bound` by rejection (no modulo bias).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    pub fn next_bit(&mut self) -> bool {
        // Low bits of SplitMix64 output are full quality.
        self.next_u64() & 1 == 1
    }

    pub fn next_i8(&mut self) -> i8 {
        (self.next_u64() & 0xff) as u8 as i8
    }

    /// Uniform in [0,1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates shuffle, deterministic per seed.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
