//! Deterministic child seeds: `child = H(master, label)`, so adding tasks
//! never changes the random streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub fn child_seed(master: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn child_rng(master: u64, label: &str) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(child_seed(master, label))
}
