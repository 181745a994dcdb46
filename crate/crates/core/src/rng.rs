//! Seed derivation for reproducible per-emitter random streams.
//!
//! Every emitter draws from its own ChaCha8 stream. The 256-bit key is four
//! consecutive outputs of SplitMix64 started at the master seed, and the
//! ChaCha stream id is the emitter index. ChaCha8 with an explicit key and
//! stream id is a fixed, platform-independent function, so the mapping
//! `(master_seed, emitter_index) -> stream` is stable everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type EmitterRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one seed by chained SplitMix64 mixing.
pub fn mix_seed(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0u64, |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

pub fn derive_emitter_rng(master_seed: u64, emitter_index: u64) -> EmitterRng {
    let mut key = [0u8; 32];
    let mut state = master_seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(state).to_le_bytes());
        state = state.wrapping_add(GOLDEN_GAMMA);
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(emitter_index);
    rng
}
