//! Directory authority keys and the k-of-n approval scheme.
//!
//! Approvals are plain Ed25519 signatures from individually identified
//! authority keys; a set verifies when at least `threshold` distinct
//! authorities signed the same message. This models the trust structure
//! without real distributed key generation, which is out of scope here.

use crate::hash::sha256;
use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};

pub const SIG_LEN: usize = 64;

/// One authority's signature over some canonical message, tagged with the
/// authority's index in the published key list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Approval {
    pub signer: u8,
    pub sig: [u8; SIG_LEN],
}

/// The published authority keys plus the approval threshold k.
#[derive(Debug, Clone)]
pub struct AuthoritySet {
    pub keys: Vec<VerifyingKey>,
    pub threshold: usize,
}

impl AuthoritySet {
    pub fn new(keys: Vec<VerifyingKey>, threshold: usize) -> Self {
        assert!(threshold >= 1 && threshold <= keys.len());
        AuthoritySet { keys, threshold }
    }

    /// True when `approvals` carries valid signatures over `msg` from at
    /// least `threshold` distinct known authorities.
    pub fn verify(&self, msg: &[u8], approvals: &[Approval]) -> bool {
        let mut seen = Vec::new();
        for a in approvals {
            let idx = a.signer as usize;
            if idx >= self.keys.len() || seen.contains(&idx) {
                continue;
            }
            let sig = Signature::from_bytes(&a.sig);
            if self.keys[idx].verify_strict(msg, &sig).is_ok() {
                seen.push(idx);
            }
        }
        seen.len() >= self.threshold
    }
}

/// Signs `msg` with each provided authority key.
pub fn approve(signers: &[(u8, &SigningKey)], msg: &[u8]) -> Vec<Approval> {
    signers
        .iter()
        .map(|(idx, key)| Approval {
            signer: *idx,
            sig: key.sign(msg).to_bytes(),
        })
        .collect()
}

/// Deterministic demonstration key, derived from a label. These stand in
/// for operator-held keys; nothing here is suitable for production custody.
pub fn demo_signing_key(label: &str) -> SigningKey {
    SigningKey::from_bytes(&sha256(label.as_bytes()))
}

/// A relay is identified by the lowercase hex of its verifying key.
pub fn relay_identity(vk: &VerifyingKey) -> String {
    hex::encode(vk.as_bytes())
}

pub fn verify_relay_sig(vk_bytes: &[u8; 32], msg: &[u8], sig: &[u8; SIG_LEN]) -> bool {
    let Ok(vk) = VerifyingKey::from_bytes(vk_bytes) else {
        return false;
    };
    vk.verify_strict(msg, &Signature::from_bytes(sig)).is_ok()
}
