//! The sparse Merkle tree over published plugins.
//!
//! A plugin's leaf is chosen by the first `depth` bits (most significant
//! first) of SHA-256 over its name, so placement is deterministic and
//! colliding names simply share a leaf. A leaf hashes the `;`-joined,
//! name-sorted records that landed on it; unoccupied leaves are all-zero.
//!
//! A record binds a name to its plugin bytes and current metadata:
//!
//! ```text
//! record = name || 0x00 || SHA-256(plugin_hash || 0x00 || canonical_meta)
//! ```

use crate::hash::{sha256, sha256_pair, zero_subtree_cache, EMPTY_LEAF};
use crate::order::PluginMeta;
use std::collections::BTreeMap;

pub const DEFAULT_DEPTH: u8 = 8;

/// Leaf index for `name`: the first `depth` bits of SHA-256(name),
/// most-significant bit first.
pub fn leaf_index(name: &str, depth: u8) -> u64 {
    assert!(depth >= 1 && depth <= 64);
    let digest = sha256(name.as_bytes());
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(first) >> (64 - depth as u32)
}

/// The committed record for one plugin.
pub fn record_bytes(meta: &PluginMeta) -> Vec<u8> {
    let mut binding = Vec::with_capacity(33 + 256);
    binding.extend_from_slice(&meta.plugin_hash);
    binding.push(0);
    binding.extend_from_slice(&meta.canonical_bytes());
    let binding = sha256(&binding);

    let mut record = Vec::with_capacity(meta.name.len() + 33);
    record.extend_from_slice(meta.name.as_bytes());
    record.push(0);
    record.extend_from_slice(&binding);
    record
}

fn leaf_hash(records: &[Vec<u8>]) -> [u8; 32] {
    if records.is_empty() {
        return EMPTY_LEAF;
    }
    let joined = records.join(&b';');
    sha256(&joined)
}

/// Builds the tree for one epoch from (name, record) pairs. Insertion
/// order is irrelevant: records are grouped per leaf and sorted by name
/// before hashing.
pub struct TreeBuilder {
    depth: u8,
    /// name -> record, kept sorted so leaf contents are canonical.
    records: BTreeMap<String, Vec<u8>>,
}

impl TreeBuilder {
    pub fn new(depth: u8) -> Self {
        assert!(depth >= 1 && depth <= 64);
        TreeBuilder {
            depth,
            records: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: &str, record: Vec<u8>) {
        self.records.insert(name.to_string(), record);
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn leaves(&self) -> BTreeMap<u64, Vec<Vec<u8>>> {
        let mut leaves: BTreeMap<u64, Vec<Vec<u8>>> = BTreeMap::new();
        // BTreeMap iteration is name-sorted, so each leaf list arrives sorted.
        for (name, record) in &self.records {
            leaves
                .entry(leaf_index(name, self.depth))
                .or_default()
                .push(record.clone());
        }
        leaves
    }

    pub fn root(&self) -> [u8; 32] {
        let leaf_hashes: BTreeMap<u64, [u8; 32]> = self
            .leaves()
            .iter()
            .map(|(&i, records)| (i, leaf_hash(records)))
            .collect();
        let zero = zero_subtree_cache(self.depth);
        subtree(self.depth, 0, &leaf_hashes, &zero)
    }

    /// Inclusion proof for `name`, or None if it was never inserted.
    pub fn prove(&self, name: &str) -> Option<InclusionProof> {
        if !self.records.contains_key(name) {
            return None;
        }
        let leaves = self.leaves();
        let leaf_hashes: BTreeMap<u64, [u8; 32]> = leaves
            .iter()
            .map(|(&i, records)| (i, leaf_hash(records)))
            .collect();
        let zero = zero_subtree_cache(self.depth);
        let index = leaf_index(name, self.depth);

        let mut siblings = Vec::with_capacity(self.depth as usize);
        for h in 0..self.depth {
            let sibling_index = (index >> h) ^ 1;
            siblings.push(subtree(h, sibling_index, &leaf_hashes, &zero));
        }
        Some(InclusionProof {
            name: name.to_string(),
            depth: self.depth,
            leaf_index: index,
            leaf_records: leaves.get(&index).cloned().unwrap_or_default(),
            siblings,
        })
    }
}

/// Hash of the height-`h` subtree whose leaf range starts at
/// `index << h`. Empty ranges come from the zero cache without hashing.
fn subtree(
    h: u8,
    index: u64,
    leaf_hashes: &BTreeMap<u64, [u8; 32]>,
    zero: &[[u8; 32]],
) -> [u8; 32] {
    let lo = index << h;
    let hi = lo + (1u64 << h);
    if leaf_hashes.range(lo..hi).next().is_none() {
        return zero[h as usize];
    }
    if h == 0 {
        return leaf_hashes[&index];
    }
    let left = subtree(h - 1, index * 2, leaf_hashes, zero);
    let right = subtree(h - 1, index * 2 + 1, leaf_hashes, zero);
    sha256_pair(&left, &right)
}

/// A verifiable path from one plugin's record to a tree root. Carries the
/// full record list of the leaf so the verifier can recompute the leaf hash
/// rather than trust it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionProof {
    pub name: String,
    pub depth: u8,
    pub leaf_index: u64,
    pub leaf_records: Vec<Vec<u8>>,
    pub siblings: Vec<[u8; 32]>,
}

impl InclusionProof {
    /// Structural checks that do not need the root: the path shape matches
    /// the depth, the leaf index matches the name, and the leaf actually
    /// contains the record this proof claims to cover.
    pub fn is_well_formed(&self, meta: &PluginMeta) -> bool {
        self.depth >= 1
            && self.depth <= 64
            && self.siblings.len() == self.depth as usize
            && self.leaf_index == leaf_index(&self.name, self.depth)
            && self.name == meta.name
            && self.leaf_records.contains(&record_bytes(meta))
    }

    pub fn compute_root(&self) -> [u8; 32] {
        let mut acc = leaf_hash(&self.leaf_records);
        for (h, sib) in self.siblings.iter().enumerate() {
            let bit = (self.leaf_index >> h) & 1;
            acc = if bit == 0 {
                sha256_pair(&acc, sib)
            } else {
                sha256_pair(sib, &acc)
            };
        }
        acc
    }
}
