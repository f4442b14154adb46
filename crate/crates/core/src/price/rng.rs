//! Counter-addressable random streams for parallel Monte Carlo.
//!
//! Every draw is fully determined by `(master_seed, path_index, step, lane)`:
//! the master seed expands to a ChaCha8 key, the path index selects the
//! cipher stream, and the step selects the word position inside it. Paths can
//! therefore run in any order, on any number of workers, and each step of a
//! path can even be regenerated in isolation, always yielding the same bits.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detmath::{norm_quantile, u64_to_open_unit};

/// Seed used when the caller does not provide one; fixed rather than drawn
/// from entropy so default runs stay reproducible.
pub const DEFAULT_MASTER_SEED: u64 = 42;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 256-bit ChaCha key expanded from a 64-bit master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey([u8; 32]);

impl StreamKey {
    pub fn from_master_seed(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        StreamKey(key)
    }

    /// Domain-separated key for auxiliary draws (e.g. bootstrap resampling)
    /// so they never collide with simulation streams.
    pub fn derive(&self, domain: u64) -> Self {
        let mut state = domain ^ 0xA076_1D64_78BD_642F;
        let mut key = self.0;
        for chunk in key.chunks_exact_mut(8) {
            let mut v = u64::from_le_bytes(chunk.try_into().unwrap());
            v ^= splitmix64(&mut state);
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        StreamKey(key)
    }
}

/// One path's random stream.
pub struct PathStream {
    rng: ChaCha8Rng,
}

impl PathStream {
    pub fn new(key: &StreamKey, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(key.0);
        rng.set_stream(path_index);
        PathStream { rng }
    }

    /// Fills `out` with independent standard normals for `step`. Addressing
    /// is absolute: the same `(step, out.len())` always maps to the same
    /// cipher words.
    pub fn normals(&mut self, step: u32, out: &mut [f64]) {
        // next_u64 consumes two 32-bit cipher words.
        let words_per_step = 2 * out.len() as u128;
        self.rng.set_word_pos(step as u128 * words_per_step);
        for z in out.iter_mut() {
            *z = norm_quantile(u64_to_open_unit(self.rng.next_u64()));
        }
    }

    /// Raw draw at an absolute counter, for auxiliary sampling.
    pub fn u64_at(&mut self, counter: u64) -> u64 {
        self.rng.set_word_pos(counter as u128 * 2);
        self.rng.next_u64()
    }
}
