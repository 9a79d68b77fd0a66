//! A transparency log for network plugins.
//!
//! Publications, withdrawals and relay protests are orders against a log
//! that advances in explicit epochs. Each epoch commits to every plugin's
//! metadata in a sparse Merkle tree whose root is signed by a k-of-n
//! authority set; relays verify an inclusion path against that signed root
//! before loading anything, and refuse to load at all when the log is
//! unreachable. Two validly signed roots for the same epoch with different
//! contents are portable proof of equivocation.
//!
//! The crate also ships the loopback TCP service and its append-only store,
//! so the whole lifecycle runs out of process exactly as it does in tests.

pub mod codec;
pub mod gate;
pub mod hash;
pub mod keys;
pub mod log;
pub mod order;
pub mod service;
pub mod store;
pub mod tree;

pub use gate::{check_load, DenyReason, LoadEvidence};
pub use keys::{approve, demo_signing_key, relay_identity, Approval, AuthoritySet};
pub use log::{is_equivocation, verify_signed_root, Ftl, ProtestOutcome, SubmitError};
pub use order::{
    validate_name, Epoch, NameError, PluginMeta, Protest, PublishOrder, SignedRoot, WithdrawOrder,
};
pub use store::Store;
pub use tree::{leaf_index, record_bytes, InclusionProof, TreeBuilder, DEFAULT_DEPTH};
