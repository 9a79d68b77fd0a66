//! Transparency log operations: run the service, publish and withdraw
//! with demo authority approvals, protest, prove and verify.

use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::Subcommand;
use ed25519_dalek::Signer;
use fan_ftl::codec::{self, Record};
use fan_ftl::order::{Protest, PublishOrder, WithdrawOrder};
use fan_ftl::service::{request, Service};
use fan_ftl::{demo_signing_key, verify_signed_root, Approval, AuthoritySet, Ftl, Store};

const DEFAULT_ADDR: &str = "127.0.0.1:4040";

#[derive(Subcommand)]
pub enum FtlCmd {
    /// Run the log service over loopback TCP
    Serve {
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
        /// Directory for the order log, sealed roots and demo keys
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value = "ftl-main")]
        id: String,
        #[arg(long, default_value_t = 8)]
        depth: u8,
    },
    /// Print the current epoch
    Epoch {
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Print the signed root for the current epoch
    Root {
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Seal the epoch and print the new signed root
    Advance {
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Publish a plugin blob; the service's demo authorities approve
    Issue {
        name: String,
        /// File whose hash the publish order commits to
        blob: PathBuf,
        /// Epoch at which the protest window closes
        #[arg(long)]
        protest: u64,
        /// Epoch at which relays may load the plugin
        #[arg(long)]
        push: u64,
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Withdraw a published plugin, effective at a future epoch
    Withdraw {
        name: String,
        /// Epoch at which the withdrawal takes effect
        #[arg(long)]
        push: u64,
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// File a protest under a demo relay identity
    Protest {
        name: String,
        /// Label the demo relay key is derived from
        #[arg(long, default_value = "relay-1")]
        relay: String,
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Print the membership proof for a plugin
    Prove {
        name: String,
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Fetch a proof and the signed root, then check both
    Verify {
        name: String,
        /// Log id the demo authority keys derive from
        #[arg(long, default_value = "ftl-main")]
        id: String,
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
    /// Print committed metadata for a plugin
    Meta {
        name: String,
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: String,
    },
}

pub fn run(cmd: FtlCmd) -> anyhow::Result<()> {
    match cmd {
        FtlCmd::Serve { addr, dir, id, depth } => serve(&addr, &dir, &id, depth),
        FtlCmd::Epoch { addr } => passthrough(&addr, "epoch"),
        FtlCmd::Root { addr } => passthrough(&addr, "root"),
        FtlCmd::Advance { addr } => passthrough(&addr, "advance"),
        FtlCmd::Meta { name, addr } => passthrough(&addr, &format!("meta name={name}")),
        FtlCmd::Prove { name, addr } => passthrough(&addr, &format!("prove name={name}")),
        FtlCmd::Issue { name, blob, protest, push, addr } => {
            issue(&addr, &name, &blob, protest, push)
        }
        FtlCmd::Withdraw { name, push, addr } => withdraw(&addr, &name, push),
        FtlCmd::Protest { name, relay, addr } => protest(&addr, &name, &relay),
        FtlCmd::Verify { name, id, addr } => verify(&addr, &name, &id),
    }
}

fn serve(addr: &str, dir: &Path, id: &str, depth: u8) -> anyhow::Result<()> {
    let store = Store::open(dir)?;
    let signers = store.load_or_create_keys(id, 3)?;
    let mut ftl = Ftl::new(id, depth, signers, 2);
    store.replay(&mut ftl)?;
    let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
    eprintln!(
        "log {id} (depth {depth}) at epoch {} serving on {addr}, store {}",
        ftl.current_epoch(),
        dir.display()
    );
    Service::new(ftl, Some(store)).serve(listener)?;
    Ok(())
}

fn passthrough(addr: &str, line: &str) -> anyhow::Result<()> {
    let resp = request(addr, line).context("requesting from the log service")?;
    if resp.starts_with("err ") {
        bail!("service: {resp}");
    }
    println!("{resp}");
    Ok(())
}

fn current_epoch(addr: &str) -> anyhow::Result<u64> {
    let resp = request(addr, "epoch")?;
    resp.strip_prefix("epoch value=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| anyhow!("unexpected epoch response {resp}"))
}

/// Asks the service's demo authorities to co-sign `msg`.
fn fetch_approvals(addr: &str, msg: &[u8]) -> anyhow::Result<Vec<Approval>> {
    let resp = request(addr, &format!("approve msg={}", hex::encode(msg)))?;
    let text = resp
        .strip_prefix("approvals value=")
        .ok_or_else(|| anyhow!("unexpected approve response {resp}"))?;
    let mut approvals = Vec::new();
    for part in text.split(',').filter(|p| !p.is_empty()) {
        let (idx, sig_hex) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("bad approval {part}"))?;
        let sig: [u8; 64] = hex::decode(sig_hex)?
            .try_into()
            .map_err(|_| anyhow!("bad approval signature length"))?;
        approvals.push(Approval { signer: idx.parse()?, sig });
    }
    Ok(approvals)
}

fn submit(addr: &str, line: &str) -> anyhow::Result<()> {
    let resp = request(addr, line)?;
    if resp != "ok" {
        bail!("service: {resp}");
    }
    Ok(())
}

fn issue(addr: &str, name: &str, blob: &Path, protest: u64, push: u64) -> anyhow::Result<()> {
    let bytes = fs::read(blob).with_context(|| format!("reading {}", blob.display()))?;
    let mut order = PublishOrder {
        name: name.to_string(),
        issued_at: current_epoch(addr)?,
        e_protest: protest,
        e_push: push,
        plugin_hash: fan_ftl::hash::sha256(&bytes),
        approvals: Vec::new(),
    };
    order.approvals = fetch_approvals(addr, &order.signing_message())?;
    submit(addr, &codec::encode_publish(&order))?;
    println!(
        "published {} (hash {}) at epoch {}; protests close at {}, push at {}",
        name,
        hex::encode(order.plugin_hash),
        order.issued_at,
        protest,
        push
    );
    Ok(())
}

fn withdraw(addr: &str, name: &str, push: u64) -> anyhow::Result<()> {
    let mut order = WithdrawOrder {
        name: name.to_string(),
        issued_at: current_epoch(addr)?,
        push_epoch: push,
        approvals: Vec::new(),
    };
    order.approvals = fetch_approvals(addr, &order.signing_message())?;
    submit(addr, &codec::encode_withdraw(&order))?;
    println!("withdrawal of {name} recorded, effective at epoch {push}");
    Ok(())
}

fn protest(addr: &str, name: &str, relay: &str) -> anyhow::Result<()> {
    let sk = demo_signing_key(&format!("relay:{relay}"));
    let vk = sk.verifying_key().to_bytes();
    let msg = Protest::signing_message(name, &vk);
    let p = Protest {
        name: name.to_string(),
        relay: vk,
        sig: sk.sign(&msg).to_bytes(),
    };
    submit(addr, &codec::encode_protest(&p))?;
    println!("protest by {relay} recorded against {name}");
    Ok(())
}

fn verify(addr: &str, name: &str, id: &str) -> anyhow::Result<()> {
    let proof_line = request(addr, &format!("prove name={name}"))?;
    if proof_line.starts_with("err ") {
        bail!("service: {proof_line}");
    }
    let proof = codec::parse_proof(&proof_line)?;
    let root_line = request(addr, "root")?;
    let Record::Root(signed) = codec::parse_record(&root_line)? else {
        bail!("unexpected root response {root_line}");
    };

    // The demo deployment derives authority keys from the log id, so a
    // client can reconstruct the verifying keys without talking to it.
    let authorities = AuthoritySet::new(
        (0..3)
            .map(|i| demo_signing_key(&format!("ftl-demo:{id}:{i}")).verifying_key())
            .collect(),
        2,
    );
    let folds = proof.compute_root() == signed.root;
    let signatures = signed.ftl_id == id && verify_signed_root(&signed, &authorities);

    println!(
        "proof: name={} depth={} leaf_index={} cotenants={}",
        proof.name,
        proof.depth,
        proof.leaf_index,
        proof.leaf_records.len().saturating_sub(1)
    );
    println!(
        "signed root: id={} epoch={} root={}",
        signed.ftl_id,
        signed.epoch,
        hex::encode(signed.root)
    );
    println!("membership: {}", if folds { "ok" } else { "MISMATCH" });
    println!(
        "authority signatures: {}",
        if signatures { "ok (2 of 3)" } else { "INVALID" }
    );
    if !(folds && signatures) {
        bail!("verification failed");
    }
    Ok(())
}
