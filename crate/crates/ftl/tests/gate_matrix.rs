//! Exhaustive gate matrix: every combination of the five failure
//! conditions must report the first failing check in gate order.

mod support;

use fan_ftl::{check_load, DenyReason, LoadEvidence};
use support::*;

/// Publishes one plugin (protest window 1, push epoch 2), optionally
/// withdraws it effective epoch 3, then advances to epoch 4 and returns
/// the committed evidence.
fn scenario(withdrawn: bool) -> (fan_ftl::PluginMeta, fan_ftl::InclusionProof, [u8; 32]) {
    let mut ftl = new_ftl(if withdrawn { "matrix-w" } else { "matrix" });
    ftl.submit_publish(publish_order(&ftl, "app/widget", 1, 2, BLOB))
        .unwrap();
    if withdrawn {
        ftl.submit_withdraw(withdraw_order(&ftl, "app/widget", 3))
            .unwrap();
    }
    for _ in 0..4 {
        ftl.advance_epoch();
    }
    let meta = ftl.meta("app/widget").unwrap();
    let proof = ftl.prove("app/widget").unwrap();
    let root = ftl.root();
    (meta, proof, root)
}

#[test]
fn every_failure_combination_reports_the_first_check_in_gate_order() {
    for bits in 0u32..32 {
        let offline = bits & 1 != 0;
        let early = bits & 2 != 0;
        let broken_path = bits & 4 != 0;
        let withdrawn = bits & 8 != 0;
        let wrong_root = bits & 16 != 0;

        let (meta, mut proof, root) = scenario(withdrawn);
        if broken_path {
            proof.siblings.pop();
        }
        let ev = LoadEvidence {
            online: !offline,
            current_epoch: if early { 1 } else { 4 },
            meta: &meta,
            proof: Some(&proof),
            trusted_root: Some(if wrong_root { [0xee; 32] } else { root }),
            plugin: BLOB,
        };

        let expected = if offline {
            Err(DenyReason::FtlOffline)
        } else if early {
            Err(DenyReason::PushEpochNotReached {
                push_epoch: 2,
                current: 1,
            })
        } else if broken_path {
            Err(DenyReason::PathInvalid)
        } else if withdrawn {
            Err(DenyReason::Withdrawn { effective: 3 })
        } else if wrong_root {
            Err(DenyReason::RootMismatch)
        } else {
            Ok(())
        };
        assert_eq!(check_load(&ev), expected, "combination {bits:05b}");
    }
}
