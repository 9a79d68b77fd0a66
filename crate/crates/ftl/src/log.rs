//! The log itself: accepts orders, advances epochs, builds the per-epoch
//! tree and signs its root.
//!
//! Time is a bare epoch counter advanced by the operator. An order
//! submitted at epoch E is committed in every tree built for epochs > E,
//! which gives relays a full epoch to observe a pending publication before
//! it can take effect.

use crate::keys::{approve, verify_relay_sig, Approval, AuthoritySet};
use crate::order::{
    validate_name, Epoch, NameError, PluginMeta, Protest, PublishOrder, SignedRoot, WithdrawOrder,
};
use crate::tree::{record_bytes, InclusionProof, TreeBuilder};
use ed25519_dalek::SigningKey;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubmitError {
    #[error("bad plugin name: {0}")]
    BadName(#[from] NameError),
    #[error("order is dated epoch {issued_at} but the log is at {current}")]
    WrongEpoch { issued_at: Epoch, current: Epoch },
    #[error("protest window must close no later than the push epoch")]
    WindowAfterPush,
    #[error("approvals do not meet the authority threshold")]
    BadApprovals,
    #[error("plugin is already published")]
    AlreadyPublished,
    #[error("plugin is not published")]
    NotPublished,
    #[error("plugin is already withdrawn")]
    AlreadyWithdrawn,
    #[error("protest window closed at epoch {closed_at}")]
    ProtestWindowClosed { closed_at: Epoch },
    #[error("relay signature does not verify")]
    BadProtestSignature,
}

/// What happened to a submitted protest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtestOutcome {
    Recorded,
    /// Byte-identical resubmission; nothing changed.
    AlreadyRecorded,
    /// Same relay, same plugin, different signature bytes: kept the first
    /// protest and logged the contradiction as misbehavior.
    MisbehaviorRecorded,
}

/// Two contradictory protest signatures from one relay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MisbehaviorEvidence {
    pub relay: [u8; 32],
    pub plugin: String,
    pub first_sig: [u8; 64],
    pub second_sig: [u8; 64],
}

struct Published {
    order: PublishOrder,
    withdraw: Option<(Epoch, WithdrawOrder)>,
    /// relay key -> (received_at, protest), first writer wins.
    protests: BTreeMap<[u8; 32], (Epoch, Protest)>,
}

/// One transparency log instance holding the authority keys that sign its
/// roots. Submission validates against the current epoch; trees are built
/// on demand for any epoch up to the current one.
pub struct Ftl {
    id: String,
    depth: u8,
    signers: Vec<SigningKey>,
    authorities: AuthoritySet,
    epoch: Epoch,
    published: BTreeMap<String, Published>,
    misbehavior: Vec<MisbehaviorEvidence>,
}

impl Ftl {
    pub fn new(id: &str, depth: u8, signers: Vec<SigningKey>, threshold: usize) -> Self {
        let keys = signers.iter().map(|s| s.verifying_key()).collect();
        Ftl {
            id: id.to_string(),
            depth,
            authorities: AuthoritySet::new(keys, threshold),
            signers,
            epoch: 0,
            published: BTreeMap::new(),
            misbehavior: Vec::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn current_epoch(&self) -> Epoch {
        self.epoch
    }

    pub fn authorities(&self) -> &AuthoritySet {
        &self.authorities
    }

    pub fn misbehavior(&self) -> &[MisbehaviorEvidence] {
        &self.misbehavior
    }

    pub fn plugin_names(&self) -> Vec<String> {
        self.published.keys().cloned().collect()
    }

    /// Signs an arbitrary order message with every authority key. The demo
    /// log wields all keys itself; a deployment would collect these
    /// signatures from separate operators.
    pub fn approve_as_authorities(&self, msg: &[u8]) -> Vec<Approval> {
        let signers: Vec<(u8, &SigningKey)> = self
            .signers
            .iter()
            .enumerate()
            .map(|(i, k)| (i as u8, k))
            .collect();
        approve(&signers, msg)
    }

    pub fn submit_publish(&mut self, order: PublishOrder) -> Result<(), SubmitError> {
        validate_name(&order.name)?;
        if order.issued_at != self.epoch {
            return Err(SubmitError::WrongEpoch {
                issued_at: order.issued_at,
                current: self.epoch,
            });
        }
        if order.e_protest > order.e_push {
            return Err(SubmitError::WindowAfterPush);
        }
        if !self
            .authorities
            .verify(&order.signing_message(), &order.approvals)
        {
            return Err(SubmitError::BadApprovals);
        }
        if self.published.contains_key(&order.name) {
            return Err(SubmitError::AlreadyPublished);
        }
        self.published.insert(
            order.name.clone(),
            Published {
                order,
                withdraw: None,
                protests: BTreeMap::new(),
            },
        );
        Ok(())
    }

    pub fn submit_withdraw(&mut self, order: WithdrawOrder) -> Result<(), SubmitError> {
        if order.issued_at != self.epoch {
            return Err(SubmitError::WrongEpoch {
                issued_at: order.issued_at,
                current: self.epoch,
            });
        }
        if !self
            .authorities
            .verify(&order.signing_message(), &order.approvals)
        {
            return Err(SubmitError::BadApprovals);
        }
        let entry = self
            .published
            .get_mut(&order.name)
            .ok_or(SubmitError::NotPublished)?;
        if entry.withdraw.is_some() {
            return Err(SubmitError::AlreadyWithdrawn);
        }
        entry.withdraw = Some((self.epoch, order));
        Ok(())
    }

    pub fn submit_protest(&mut self, protest: Protest) -> Result<ProtestOutcome, SubmitError> {
        let epoch = self.epoch;
        let entry = self
            .published
            .get_mut(&protest.name)
            .ok_or(SubmitError::NotPublished)?;
        if epoch > entry.order.e_protest {
            return Err(SubmitError::ProtestWindowClosed {
                closed_at: entry.order.e_protest,
            });
        }
        let msg = Protest::signing_message(&protest.name, &protest.relay);
        if !verify_relay_sig(&protest.relay, &msg, &protest.sig) {
            return Err(SubmitError::BadProtestSignature);
        }
        match entry.protests.get(&protest.relay) {
            None => {
                entry.protests.insert(protest.relay, (epoch, protest));
                Ok(ProtestOutcome::Recorded)
            }
            Some((_, existing)) if existing.sig == protest.sig => {
                Ok(ProtestOutcome::AlreadyRecorded)
            }
            Some((_, existing)) => {
                self.misbehavior.push(MisbehaviorEvidence {
                    relay: protest.relay,
                    plugin: protest.name.clone(),
                    first_sig: existing.sig,
                    second_sig: protest.sig,
                });
                Ok(ProtestOutcome::MisbehaviorRecorded)
            }
        }
    }

    pub fn advance_epoch(&mut self) -> SignedRoot {
        self.epoch += 1;
        self.signed_root()
    }

    /// Metadata as committed in the tree for `epoch`: only orders issued
    /// strictly before it are visible.
    pub fn meta_at(&self, epoch: Epoch, name: &str) -> Option<PluginMeta> {
        let entry = self.published.get(name)?;
        if entry.order.issued_at >= epoch {
            return None;
        }
        let withdraw = entry
            .withdraw
            .as_ref()
            .filter(|(issued, _)| *issued < epoch)
            .map(|(_, w)| w.clone());
        let protests = entry
            .protests
            .values()
            .filter(|(received, _)| *received < epoch)
            .map(|(_, p)| p.clone())
            .collect();
        Some(PluginMeta {
            name: entry.order.name.clone(),
            e_protest: entry.order.e_protest,
            e_push: entry.order.e_push,
            plugin_hash: entry.order.plugin_hash,
            approvals: entry.order.approvals.clone(),
            withdraw,
            protests,
        })
    }

    pub fn meta(&self, name: &str) -> Option<PluginMeta> {
        self.meta_at(self.epoch, name)
    }

    fn tree_at(&self, epoch: Epoch) -> TreeBuilder {
        let mut tree = TreeBuilder::new(self.depth);
        for name in self.published.keys() {
            if let Some(meta) = self.meta_at(epoch, name) {
                tree.insert(name, record_bytes(&meta));
            }
        }
        tree
    }

    pub fn root_at(&self, epoch: Epoch) -> [u8; 32] {
        self.tree_at(epoch).root()
    }

    pub fn root(&self) -> [u8; 32] {
        self.root_at(self.epoch)
    }

    pub fn prove_at(&self, epoch: Epoch, name: &str) -> Option<InclusionProof> {
        self.tree_at(epoch).prove(name)
    }

    pub fn prove(&self, name: &str) -> Option<InclusionProof> {
        self.prove_at(self.epoch, name)
    }

    pub fn signed_root_at(&self, epoch: Epoch) -> SignedRoot {
        let root = self.root_at(epoch);
        let msg = SignedRoot::signing_message(&self.id, epoch, &root);
        SignedRoot {
            ftl_id: self.id.clone(),
            epoch,
            root,
            approvals: self.approve_as_authorities(&msg),
        }
    }

    pub fn signed_root(&self) -> SignedRoot {
        self.signed_root_at(self.epoch)
    }
}

/// Verifies one signed root against an authority set.
pub fn verify_signed_root(str_: &SignedRoot, authorities: &AuthoritySet) -> bool {
    let msg = SignedRoot::signing_message(&str_.ftl_id, str_.epoch, &str_.root);
    authorities.verify(&msg, &str_.approvals)
}

/// True when `a` and `b` prove the log equivocated: both validly signed,
/// same log, same epoch, different roots.
pub fn is_equivocation(a: &SignedRoot, b: &SignedRoot, authorities: &AuthoritySet) -> bool {
    a.ftl_id == b.ftl_id
        && a.epoch == b.epoch
        && a.root != b.root
        && verify_signed_root(a, authorities)
        && verify_signed_root(b, authorities)
}
