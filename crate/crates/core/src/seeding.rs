//! Deterministic seed derivation.
//!
//! Every stage and every episode draws its randomness from a seed derived
//! from the master seed, so independent pieces of a run are reproducible in
//! isolation and insensitive to execution order.

use sha2::{Digest, Sha256};

/// Derives a stage seed from a master seed and a list of label parts
/// (stage name, cell id, ...).
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in parts {
        hasher.update([0xff]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Cheap per-index stream split (splitmix64 finalizer). Used to hand each
/// episode its own seed without hashing strings in hot loops.
pub fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
