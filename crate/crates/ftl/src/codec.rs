//! Canonical text encoding for orders, roots and proofs: one record per
//! line, `kind` first, then `key=value` pairs separated by single spaces.
//! The same lines travel over the wire, sit in the on-disk order log, and
//! print from the command line, so every byte a client sees can be
//! replayed or diffed.

use crate::keys::{Approval, SIG_LEN};
use crate::order::{Protest, PublishOrder, SignedRoot, WithdrawOrder};
use crate::tree::InclusionProof;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("empty line")]
    Empty,
    #[error("unknown record kind `{0}`")]
    UnknownKind(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("field `{field}` is malformed")]
    BadField { field: &'static str },
}

fn approvals_text(approvals: &[Approval]) -> String {
    approvals
        .iter()
        .map(|a| format!("{}:{}", a.signer, hex::encode(a.sig)))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_approvals(text: &str) -> Result<Vec<Approval>, CodecError> {
    let bad = || CodecError::BadField { field: "approvals" };
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|part| {
            let (idx, sig) = part.split_once(':').ok_or_else(bad)?;
            let signer: u8 = idx.parse().map_err(|_| bad())?;
            let bytes = hex::decode(sig).map_err(|_| bad())?;
            let sig: [u8; SIG_LEN] = bytes.try_into().map_err(|_| bad())?;
            Ok(Approval { signer, sig })
        })
        .collect()
}

fn parse_hex32(text: &str, field: &'static str) -> Result<[u8; 32], CodecError> {
    let bytes = hex::decode(text).map_err(|_| CodecError::BadField { field })?;
    bytes.try_into().map_err(|_| CodecError::BadField { field })
}

struct Fields<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(rest: &'a str) -> Self {
        let mut map = BTreeMap::new();
        for tok in rest.split(' ').filter(|t| !t.is_empty()) {
            if let Some((k, v)) = tok.split_once('=') {
                map.insert(k, v);
            }
        }
        Fields { map }
    }

    fn get(&self, key: &'static str) -> Result<&'a str, CodecError> {
        self.map.get(key).copied().ok_or(CodecError::MissingField(key))
    }

    fn u64(&self, key: &'static str) -> Result<u64, CodecError> {
        self.get(key)?
            .parse()
            .map_err(|_| CodecError::BadField { field: key })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    Publish(PublishOrder),
    Withdraw(WithdrawOrder),
    Protest(Protest),
    Root(SignedRoot),
    /// Epoch advance marker, used by the persistent log to replay history.
    Advance { epoch: u64 },
}

pub fn encode_publish(o: &PublishOrder) -> String {
    format!(
        "publish name={} issued_at={} e_protest={} e_push={} plugin_hash={} approvals={}",
        o.name,
        o.issued_at,
        o.e_protest,
        o.e_push,
        hex::encode(o.plugin_hash),
        approvals_text(&o.approvals)
    )
}

pub fn encode_withdraw(o: &WithdrawOrder) -> String {
    format!(
        "withdraw name={} issued_at={} push_epoch={} approvals={}",
        o.name,
        o.issued_at,
        o.push_epoch,
        approvals_text(&o.approvals)
    )
}

pub fn encode_protest(p: &Protest) -> String {
    format!(
        "protest name={} relay={} sig={}",
        p.name,
        hex::encode(p.relay),
        hex::encode(p.sig)
    )
}

pub fn encode_root(r: &SignedRoot) -> String {
    format!(
        "root ftl_id={} epoch={} root={} approvals={}",
        r.ftl_id,
        r.epoch,
        hex::encode(r.root),
        approvals_text(&r.approvals)
    )
}

pub fn encode_advance(epoch: u64) -> String {
    format!("advance epoch={epoch}")
}

pub fn encode_proof(p: &InclusionProof) -> String {
    let records = p
        .leaf_records
        .iter()
        .map(hex::encode)
        .collect::<Vec<_>>()
        .join(";");
    let siblings = p
        .siblings
        .iter()
        .map(hex::encode)
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "proof name={} depth={} leaf_index={} records={} siblings={}",
        p.name, p.depth, p.leaf_index, records, siblings
    )
}

pub fn parse_record(line: &str) -> Result<Record, CodecError> {
    let line = line.trim_end();
    let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
    if kind.is_empty() {
        return Err(CodecError::Empty);
    }
    let f = Fields::parse(rest);
    match kind {
        "publish" => Ok(Record::Publish(PublishOrder {
            name: f.get("name")?.to_string(),
            issued_at: f.u64("issued_at")?,
            e_protest: f.u64("e_protest")?,
            e_push: f.u64("e_push")?,
            plugin_hash: parse_hex32(f.get("plugin_hash")?, "plugin_hash")?,
            approvals: parse_approvals(f.get("approvals")?)?,
        })),
        "withdraw" => Ok(Record::Withdraw(WithdrawOrder {
            name: f.get("name")?.to_string(),
            issued_at: f.u64("issued_at")?,
            push_epoch: f.u64("push_epoch")?,
            approvals: parse_approvals(f.get("approvals")?)?,
        })),
        "protest" => {
            let sig_bytes =
                hex::decode(f.get("sig")?).map_err(|_| CodecError::BadField { field: "sig" })?;
            Ok(Record::Protest(Protest {
                name: f.get("name")?.to_string(),
                relay: parse_hex32(f.get("relay")?, "relay")?,
                sig: sig_bytes
                    .try_into()
                    .map_err(|_| CodecError::BadField { field: "sig" })?,
            }))
        }
        "root" => Ok(Record::Root(SignedRoot {
            ftl_id: f.get("ftl_id")?.to_string(),
            epoch: f.u64("epoch")?,
            root: parse_hex32(f.get("root")?, "root")?,
            approvals: parse_approvals(f.get("approvals")?)?,
        })),
        "advance" => Ok(Record::Advance {
            epoch: f.u64("epoch")?,
        }),
        other => Err(CodecError::UnknownKind(other.to_string())),
    }
}

pub fn parse_proof(line: &str) -> Result<InclusionProof, CodecError> {
    let line = line.trim_end();
    let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
    if kind != "proof" {
        return Err(CodecError::UnknownKind(kind.to_string()));
    }
    let f = Fields::parse(rest);
    let records = f.get("records")?;
    let leaf_records = if records.is_empty() {
        Vec::new()
    } else {
        records
            .split(';')
            .map(|r| hex::decode(r).map_err(|_| CodecError::BadField { field: "records" }))
            .collect::<Result<_, _>>()?
    };
    let siblings_text = f.get("siblings")?;
    let siblings = if siblings_text.is_empty() {
        Vec::new()
    } else {
        siblings_text
            .split(',')
            .map(|s| parse_hex32(s, "siblings"))
            .collect::<Result<_, _>>()?
    };
    Ok(InclusionProof {
        name: f.get("name")?.to_string(),
        depth: f
            .u64("depth")?
            .try_into()
            .map_err(|_| CodecError::BadField { field: "depth" })?,
        leaf_index: f.u64("leaf_index")?,
        leaf_records,
        siblings,
    })
}
