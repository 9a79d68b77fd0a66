//! Hashing primitives for the transparency tree.
//!
//! Everything is SHA-256. An unoccupied leaf is all-zero (not the hash of
//! anything), interior nodes hash the concatenation of their children, and
//! the all-empty subtree hashes are precomputed once per depth.

use sha2::{Digest, Sha256};

pub const HASH_LEN: usize = 32;

/// Hash of an unoccupied leaf.
pub const EMPTY_LEAF: [u8; 32] = [0u8; 32];

pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    let mut out = [0u8; 32];
    out.copy_from_slice(&Sha256::digest(bytes));
    out
}

pub fn sha256_pair(left: &[u8; 32], right: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(left);
    h.update(right);
    let mut out = [0u8; 32];
    out.copy_from_slice(&h.finalize());
    out
}

/// `cache[h]` is the hash of an entirely empty subtree of height `h`
/// (height 0 = a single leaf).
pub fn zero_subtree_cache(depth: u8) -> Vec<[u8; 32]> {
    let mut cache = Vec::with_capacity(depth as usize + 1);
    cache.push(EMPTY_LEAF);
    for h in 0..depth as usize {
        let z = cache[h];
        cache.push(sha256_pair(&z, &z));
    }
    cache
}
