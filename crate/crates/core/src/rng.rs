//! Counter-based random streams.
//!
//! Every random quantity in the crate is drawn from a [`Stream`] identified by a
//! seed and a small tuple of integer keys (a replicate index, a vertex, a block
//! pair). Streams with different keys are statistically independent and can be
//! created in any order, so results never depend on how work is split across
//! threads.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a stream key from a seed and a sequence of integer labels.
pub fn derive_key(seed: u64, labels: &[u64]) -> u64 {
    let mut h = mix64(seed ^ 0x5851_F42D_4C95_7F2D);
    for &label in labels {
        h = mix64(h.wrapping_add(GOLDEN) ^ mix64(label.wrapping_add(0xD1B5_4A32_D192_ED03)));
    }
    h
}

/// Counter-mode SplitMix64 generator: output `i` is `mix64(key + i * GOLDEN)`.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64, labels: &[u64]) -> Self {
        Stream {
            key: derive_key(seed, labels),
            counter: 0,
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`, safe to take logarithms of.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for Stream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

/// Split `0..total` into `chunks` contiguous ranges of near-equal size.
pub fn chunk_ranges(total: u64, chunks: usize) -> Vec<std::ops::Range<u64>> {
    let chunks = chunks.max(1) as u64;
    let base = total / chunks;
    let extra = total % chunks;
    let mut start = 0;
    (0..chunks)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .filter(|r| !r.is_empty())
        .collect()
}
