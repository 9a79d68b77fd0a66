//! Shared builders for the log lifecycle tests: a demo log with three
//! authorities (threshold two) and fully-approved orders.

#![allow(dead_code)]

use ed25519_dalek::Signer;
use fan_ftl::hash::sha256;
use fan_ftl::{demo_signing_key, Ftl, Protest, PublishOrder, WithdrawOrder};

pub const BLOB: &[u8] = b"plugin bytecode bytes";

pub fn new_ftl(id: &str) -> Ftl {
    let signers = (0..3)
        .map(|i| demo_signing_key(&format!("ftl-demo:{id}:{i}")))
        .collect();
    Ftl::new(id, 8, signers, 2)
}

pub fn publish_order(
    ftl: &Ftl,
    name: &str,
    e_protest: u64,
    e_push: u64,
    blob: &[u8],
) -> PublishOrder {
    let mut order = PublishOrder {
        name: name.to_string(),
        issued_at: ftl.current_epoch(),
        e_protest,
        e_push,
        plugin_hash: sha256(blob),
        approvals: Vec::new(),
    };
    order.approvals = ftl.approve_as_authorities(&order.signing_message());
    order
}

pub fn withdraw_order(ftl: &Ftl, name: &str, push_epoch: u64) -> WithdrawOrder {
    let mut order = WithdrawOrder {
        name: name.to_string(),
        issued_at: ftl.current_epoch(),
        push_epoch,
        approvals: Vec::new(),
    };
    order.approvals = ftl.approve_as_authorities(&order.signing_message());
    order
}

/// A protest signed by a relay whose identity key derives from `relay_label`.
pub fn relay_protest(name: &str, relay_label: &str) -> Protest {
    let sk = demo_signing_key(relay_label);
    let relay = sk.verifying_key().to_bytes();
    let msg = Protest::signing_message(name, &relay);
    Protest {
        name: name.to_string(),
        relay,
        sig: sk.sign(&msg).to_bytes(),
    }
}
