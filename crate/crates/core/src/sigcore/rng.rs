use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::C64;

/// Reproducible random stream keyed by `(master_seed, substream_id)`.
///
/// The key selects a ChaCha8 key and stream, so two streams with the same key
/// yield the same sequence and streams with different substream ids never
/// share state.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    substream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, substream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(substream_id);
        Self {
            master_seed,
            substream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn substream_id(&self) -> u64 {
        self.substream_id
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// One draw from CN(0, variance).
    pub fn complex_normal(&mut self, variance: f64) -> C64 {
        let s = (variance / 2.0).sqrt();
        C64::new(s * self.standard_normal(), s * self.standard_normal())
    }

    /// Uniform integer on `0..m` (`m > 0`).
    pub fn below(&mut self, m: usize) -> usize {
        ((self.uniform() * m as f64) as usize).min(m - 1)
    }

    pub fn bit(&mut self) -> bool {
        self.rng.next_u32() & 1 == 1
    }

    pub fn bits(&mut self, n: usize) -> Vec<bool> {
        (0..n).map(|_| self.bit()).collect()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
