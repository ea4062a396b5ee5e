//! Deterministic, splittable random-number streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the master seed and
//! positioned on its own 64-bit stream id, so deriving a stream costs one
//! key setup and streams never overlap.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::special::std_normal_quantile;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// A single-owner stream of uniforms and normals.
///
/// Identical `(master_seed, stream_id)` pairs produce identical sequences on
/// every platform.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    words: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            words: 0,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 64-bit words consumed so far.
    pub fn words_consumed(&self) -> u64 {
        self.words
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.words += 1;
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution. Consumes one word.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on the open interval `(0, 1)`. Consumes one word.
    #[inline]
    pub fn next_open_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Standard normal by inversion of one open uniform. Consumes one word.
    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        std_normal_quantile(self.next_open_uniform())
    }
}

/// Derives a master seed for a named sub-experiment so that unrelated
/// experiments sharing one user seed do not share streams.
pub fn derive_seed(master_seed: u64, salt: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(salt))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
