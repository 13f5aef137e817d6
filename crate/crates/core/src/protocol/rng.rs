//! Deterministic randomization. A phase seed is
//! `SHA-256(b"anonbench-study-v1" || seed_base as u64 LE || len(listener) as u64 LE
//! || listener || len(tag) as u64 LE || tag)`, used as the 32-byte ChaCha20 key
//! (`rand_chacha::ChaCha20Rng::from_seed`). Indices are drawn by rejection
//! sampling on `next_u64`; shuffles are Fisher–Yates from the last element down.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type StudyRng = ChaCha20Rng;

const DOMAIN: &[u8] = b"anonbench-study-v1";

pub fn phase_rng(seed_base: u64, listener_id: &str, tag: &str) -> StudyRng {
    let mut h = Sha256::new();
    h.update(DOMAIN);
    h.update(seed_base.to_le_bytes());
    h.update((listener_id.len() as u64).to_le_bytes());
    h.update(listener_id.as_bytes());
    h.update((tag.len() as u64).to_le_bytes());
    h.update(tag.as_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

/// Uniform integer in `0..n`, `n > 0`.
pub fn uniform_below(rng: &mut impl RngCore, n: u64) -> u64 {
    assert!(n > 0);
    let zone = u64::MAX - (u64::MAX % n + 1) % n;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % n;
        }
    }
}

pub(crate) fn shuffle<T>(rng: &mut impl RngCore, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

pub(crate) fn coin(rng: &mut impl RngCore) -> bool {
    rng.next_u32() & 1 == 1
}
