//! Deterministic random streams addressed by a path of integers.
//!
//! A [`SeedSpec`] names a stream as `(master_seed, [i₀, i₁, …])`. The path is
//! hashed into a ChaCha8 key, so any stream can be regenerated from its
//! address alone, independent of how many other streams were consumed
//! before it or on which thread.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Address of one random stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_path: Vec<u64>,
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64) -> Self {
        Self {
            master_seed,
            stream_path: Vec::new(),
        }
    }

    pub fn with_path(master_seed: u64, stream_path: &[u64]) -> Self {
        Self {
            master_seed,
            stream_path: stream_path.to_vec(),
        }
    }

    /// The stream one level below this one.
    pub fn child(&self, index: u64) -> Self {
        let mut stream_path = Vec::with_capacity(self.stream_path.len() + 1);
        stream_path.extend_from_slice(&self.stream_path);
        stream_path.push(index);
        Self {
            master_seed: self.master_seed,
            stream_path,
        }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = mix(self.master_seed ^ 0x5eed_5eed_5eed_5eed);
        for &p in &self.stream_path {
            h = mix(h ^ mix(p.wrapping_add(0x243f_6a88_85a3_08d3)));
        }
        h = mix(h ^ self.stream_path.len() as u64);
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            h = mix(h.wrapping_add(i as u64));
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        key
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key())
    }

    /// Fills `out` with independent standard-normal variates.
    pub fn fill_standard_normal(&self, out: &mut [f64]) {
        let mut rng = self.rng();
        for v in out {
            *v = rng.sample(StandardNormal);
        }
    }

    /// `count` independent standard-normal variates.
    pub fn draw_standard_normal(&self, count: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; count];
        self.fill_standard_normal(&mut out);
        out
    }
}
