//! Seeded random streams.
//!
//! Every stream is ChaCha20 (the `rand_chacha` 0.9 implementation) keyed by
//! the 64-bit seed written little-endian into the first eight key bytes, with
//! the remaining key bytes zero. Independent streams under one seed are
//! selected with the ChaCha stream id, so results do not depend on how work is
//! scheduled across threads.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Recorded next to the seed in every released artifact.
pub const ALGORITHM_ID: &str = "chacha20/le64-key/stream-id";

/// Returns stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform on `[0, 1)` with 53 random bits.
pub fn unit_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform on the open interval `(−½, ½)`.
pub fn centered_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u = unit_uniform(rng) - 0.5;
        if u > -0.5 {
            return u;
        }
    }
}
