//! The relay-side load gate: the ordered checks a relay runs against
//! transparency evidence before it will load a plugin.
//!
//! Checks run in a fixed order and the first failure wins, so operators
//! see the most fundamental problem first (no log connectivity) before
//! derived ones (a mismatching root).

use crate::order::{Epoch, PluginMeta};
use crate::tree::InclusionProof;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DenyReason {
    #[error("transparency log unreachable")]
    FtlOffline,
    #[error("push epoch {push_epoch} not reached at epoch {current}")]
    PushEpochNotReached { push_epoch: Epoch, current: Epoch },
    #[error("inclusion path is malformed or does not cover this plugin")]
    PathInvalid,
    #[error("plugin withdrawn effective epoch {effective}")]
    Withdrawn { effective: Epoch },
    #[error("inclusion path computes a different root than the signed one")]
    RootMismatch,
}

/// Everything a relay gathered about one plugin before deciding to load it.
pub struct LoadEvidence<'a> {
    /// Whether the log answered at all this epoch.
    pub online: bool,
    pub current_epoch: Epoch,
    pub meta: &'a PluginMeta,
    pub proof: Option<&'a InclusionProof>,
    /// Root from a verified signed tree root for `current_epoch`.
    pub trusted_root: Option<[u8; 32]>,
    /// The plugin bytes about to be loaded.
    pub plugin: &'a [u8],
}

/// Runs the gate. `Ok(())` means the plugin may load.
pub fn check_load(ev: &LoadEvidence) -> Result<(), DenyReason> {
    if !ev.online {
        return Err(DenyReason::FtlOffline);
    }
    if ev.current_epoch < ev.meta.e_push {
        return Err(DenyReason::PushEpochNotReached {
            push_epoch: ev.meta.e_push,
            current: ev.current_epoch,
        });
    }
    let proof = ev.proof.ok_or(DenyReason::PathInvalid)?;
    let blob_hash = crate::hash::sha256(ev.plugin);
    if blob_hash != ev.meta.plugin_hash || !proof.is_well_formed(ev.meta) {
        return Err(DenyReason::PathInvalid);
    }
    if let Some(w) = &ev.meta.withdraw {
        if ev.current_epoch >= w.push_epoch {
            return Err(DenyReason::Withdrawn {
                effective: w.push_epoch,
            });
        }
    }
    match ev.trusted_root {
        Some(root) if proof.compute_root() == root => Ok(()),
        _ => Err(DenyReason::RootMismatch),
    }
}
