//! Orders submitted to the log and the per-plugin metadata they accumulate.
//!
//! Every order carries a canonical signing message, and published metadata
//! has a canonical byte form (length-prefixed fields) that the tree commits
//! to. Canonicalization is what makes the root independent of submission
//! order and reruns.

use crate::keys::{Approval, SIG_LEN};
use thiserror::Error;

/// Epoch counter. Epochs advance explicitly; an order issued at epoch E is
/// visible in trees built for epochs strictly greater than E.
pub type Epoch = u64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("name is empty or longer than 255 bytes")]
    BadLength,
    #[error("name must contain exactly one '/' separating namespace and plugin")]
    BadShape,
    #[error("name contains a character outside printable ASCII or a reserved one (';')")]
    BadCharacter,
}

/// Plugin names are `namespace/plugin`: printable ASCII, no spaces, no `;`
/// (the record separator inside tree leaves), exactly one `/`.
pub fn validate_name(name: &str) -> Result<(), NameError> {
    if name.is_empty() || name.len() > 255 {
        return Err(NameError::BadLength);
    }
    if name.bytes().filter(|&b| b == b'/').count() != 1
        || name.starts_with('/')
        || name.ends_with('/')
    {
        return Err(NameError::BadShape);
    }
    if name
        .bytes()
        .any(|b| !(0x21..=0x7e).contains(&b) || b == b';')
    {
        return Err(NameError::BadCharacter);
    }
    Ok(())
}

/// Directory-approved publication of one plugin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublishOrder {
    pub name: String,
    pub issued_at: Epoch,
    /// Last epoch at which relays may protest this plugin.
    pub e_protest: Epoch,
    /// First epoch at which relays may load this plugin.
    pub e_push: Epoch,
    pub plugin_hash: [u8; 32],
    pub approvals: Vec<Approval>,
}

impl PublishOrder {
    pub fn signing_message(&self) -> Vec<u8> {
        format!(
            "publish:{}:{}:{}:{}:{}",
            self.name,
            self.issued_at,
            self.e_protest,
            self.e_push,
            hex::encode(self.plugin_hash)
        )
        .into_bytes()
    }
}

/// Directory-approved withdrawal. Takes effect once the current epoch
/// reaches `push_epoch`; until then already-verified copies keep working.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WithdrawOrder {
    pub name: String,
    pub issued_at: Epoch,
    pub push_epoch: Epoch,
    pub approvals: Vec<Approval>,
}

impl WithdrawOrder {
    pub fn signing_message(&self) -> Vec<u8> {
        format!(
            "withdraw:{}:{}:{}",
            self.name, self.issued_at, self.push_epoch
        )
        .into_bytes()
    }
}

/// A relay's objection to a published plugin, signed with the relay's
/// identity key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protest {
    pub name: String,
    /// Raw verifying key bytes; the identity string is its lowercase hex.
    pub relay: [u8; 32],
    pub sig: [u8; SIG_LEN],
}

impl Protest {
    pub fn signing_message(name: &str, relay: &[u8; 32]) -> Vec<u8> {
        format!("{}:protest:{}", hex::encode(relay), name).into_bytes()
    }
}

/// Everything the tree commits to about one published plugin at some epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PluginMeta {
    pub name: String,
    pub e_protest: Epoch,
    pub e_push: Epoch,
    pub plugin_hash: [u8; 32],
    pub approvals: Vec<Approval>,
    pub withdraw: Option<WithdrawOrder>,
    /// Sorted by relay key bytes.
    pub protests: Vec<Protest>,
}

fn push_field(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn approvals_bytes(approvals: &[Approval]) -> Vec<u8> {
    let mut sorted: Vec<&Approval> = approvals.iter().collect();
    sorted.sort_by_key(|a| a.signer);
    let mut out = Vec::with_capacity(sorted.len() * (1 + SIG_LEN));
    for a in sorted {
        out.push(a.signer);
        out.extend_from_slice(&a.sig);
    }
    out
}

impl PluginMeta {
    /// Canonical length-prefixed field sequence: name, protest epoch, push
    /// epoch, approvals, withdraw (possibly empty), protest list.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        push_field(&mut out, self.name.as_bytes());
        push_field(&mut out, &self.e_protest.to_le_bytes());
        push_field(&mut out, &self.e_push.to_le_bytes());
        push_field(&mut out, &approvals_bytes(&self.approvals));
        let withdraw = match &self.withdraw {
            None => Vec::new(),
            Some(w) => {
                let mut b = w.push_epoch.to_le_bytes().to_vec();
                b.extend_from_slice(&approvals_bytes(&w.approvals));
                b
            }
        };
        push_field(&mut out, &withdraw);
        let mut protests: Vec<&Protest> = self.protests.iter().collect();
        protests.sort_by(|a, b| a.relay.cmp(&b.relay));
        let mut pb = Vec::new();
        for p in protests {
            pb.extend_from_slice(&(p.relay.len() as u32).to_le_bytes());
            pb.extend_from_slice(&p.relay);
            pb.extend_from_slice(&p.sig);
        }
        push_field(&mut out, &pb);
        out
    }
}

/// A signed tree root for one epoch. Two of these with valid approvals,
/// the same log identity and epoch but different roots are proof of
/// equivocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedRoot {
    pub ftl_id: String,
    pub epoch: Epoch,
    pub root: [u8; 32],
    pub approvals: Vec<Approval>,
}

impl SignedRoot {
    pub fn signing_message(ftl_id: &str, epoch: Epoch, root: &[u8; 32]) -> Vec<u8> {
        format!("str:{}:{}:{}", ftl_id, epoch, hex::encode(root)).into_bytes()
    }
}
