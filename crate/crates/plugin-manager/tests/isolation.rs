//! Namespace isolation, sandbox fuzzing through the dispatcher, the
//! decoded-program cache, and whole-descriptor loading.

#[path = "../../vm/tests/support/mod.rs"]
mod vmsupport;

use std::sync::Arc;

use fan_plugin_manager::{
    AttachMode, HookConfig, LoadError, NullHost, PluginDescriptor, PluginManager,
};
use fan_vm::{assemble, encode_program};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn object(src: &str) -> Vec<u8> {
    encode_program(&assemble(src).unwrap().insns)
}

#[test]
fn namespaces_cannot_see_each_others_heaps() {
    let mut mgr = PluginManager::new();
    let write = mgr.register_hook("write", HookConfig::default());
    let probe = mgr.register_hook("probe", HookConfig::default());
    let check = mgr.register_hook("check", HookConfig::default());
    mgr.attach(
        "alpha", 4096, write, AttachMode::Replace, "p", None,
        &object(
            "mov64 r1, 64\ncall 3\nlddw r2, 0xdeadbeefcafebabe\nstxdw [r0], r2\nmov64 r0, 0\nexit",
        ),
    )
    .unwrap();
    // The probe allocates the same way in its own namespace and reads
    // back: fresh, zeroed memory, not alpha's pattern.
    mgr.attach(
        "beta", 4096, probe, AttachMode::Replace, "p", None,
        &object("mov64 r1, 64\ncall 3\nldxdw r0, [r0]\nexit"),
    )
    .unwrap();
    mgr.attach(
        "alpha", 4096, check, AttachMode::Replace, "p", None,
        &object("mov64 r1, 0\nldxdw r0, [r1]\nexit"),
    )
    .unwrap();

    let mut env = NullHost;
    assert_eq!(mgr.dispatch(write, &mut env, &[]).faults, 0);
    let out = mgr.dispatch(probe, &mut env, &[]);
    assert_eq!(out.faults, 0);
    assert_eq!(out.value, 0, "beta saw alpha's bytes");
    let out = mgr.dispatch(check, &mut env, &[]);
    assert_eq!(out.value, 0xdeadbeefcafebabe, "alpha's own state is intact");
}

#[test]
fn random_programs_never_corrupt_the_host() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a9a);
    let mut mgr = PluginManager::new();
    let hook = mgr.register_hook("fuzz", HookConfig::default());
    let mut env = NullHost;
    let input: Vec<u8> = (0..48).map(|i| i as u8).collect();
    let (mut clean, mut faulted) = (0usize, 0usize);
    for i in 0..2_000 {
        let insns = vmsupport::random_mem_program(&mut rng);
        let obj = encode_program(&insns);
        let ns = format!("fuzz-{i}");
        let id = mgr
            .attach(&ns, 4096, hook, AttachMode::Add, "p", None, &obj)
            .unwrap();
        let out = mgr.dispatch(hook, &mut env, &input);
        assert!(out.faults <= 1);
        if out.faults == 1 {
            faulted += 1;
        } else {
            clean += 1;
        }
        assert!(mgr.sandbox(&ns).unwrap().canaries_intact());
        assert!(mgr.detach(id));
    }
    assert!(clean > 0 && faulted > 0, "clean={clean} faulted={faulted}");
    assert_eq!(mgr.faults().len(), faulted);
}

#[test]
fn reloading_known_bytes_skips_decode_and_validation() {
    let mut mgr = PluginManager::new();
    let obj = object("mov64 r0, 7\nexit");
    let first = mgr.load_program(&obj, "one").unwrap();
    let second = mgr.load_program(&obj, "two").unwrap();
    assert!(Arc::ptr_eq(&first, &second));
    assert_eq!(mgr.cache_stats(), (1, 1));

    let other = object("mov64 r0, 8\nexit");
    let third = mgr.load_program(&other, "three").unwrap();
    assert!(!Arc::ptr_eq(&first, &third));
    assert_eq!(mgr.cache_stats(), (1, 2));
}

const FIXTURE: &str = include_str!("fixtures/dropmark_defense.plugin");

const DEFENSE_HOOKS: [&str; 6] = [
    "circpad_global_machine_init",
    "circpad_setup_machine_on_circ_add",
    "relay_process_edge_unknown",
    "connedge_connection_ap_handshake_send_begin_add",
    "connedge_received_connected_cell_add",
    "circpad_send_padding_cell_for_callback_replace",
];

#[test]
fn the_defense_bundle_loads_against_registered_hooks() {
    let desc = PluginDescriptor::parse(FIXTURE).unwrap();
    let mut mgr = PluginManager::new();
    for hook in DEFENSE_HOOKS {
        mgr.register_hook(hook, HookConfig::default());
    }
    let stub = object("mov64 r0, 0\nexit");
    let mut resolve = |_name: &str| Some(stub.clone());
    let ids = mgr
        .load_descriptor("dropmark-defense", &desc, &mut resolve)
        .unwrap();
    assert_eq!(ids.len(), 6);

    let sandbox = mgr.sandbox("dropmark-defense").unwrap();
    assert_eq!(sandbox.heap_limit(), 16_777_216);
    assert_eq!(sandbox.allocated(), 0);
    // One distinct object resolved six times: decoded once.
    assert_eq!(mgr.cache_stats(), (5, 1));

    let infos = mgr.attachments();
    assert_eq!(infos.len(), 6);
    let send_begin = infos
        .iter()
        .find(|i| i.hook == "connedge_connection_ap_handshake_send_begin_add")
        .unwrap();
    assert_eq!(send_begin.param, Some(1));
    assert_eq!(send_begin.mode, AttachMode::Add);
    let connected = infos
        .iter()
        .find(|i| i.hook == "connedge_received_connected_cell_add")
        .unwrap();
    assert_eq!(connected.param, Some(2));
    let padding = infos
        .iter()
        .find(|i| i.hook == "circpad_send_padding_cell_for_callback_replace")
        .unwrap();
    assert_eq!(padding.mode, AttachMode::Replace);
    assert_eq!(padding.protocol, "protocol_circpad");

    // The bundle cannot land twice: its replace slot is taken.
    let err = mgr
        .load_descriptor("second", &desc, &mut resolve)
        .unwrap_err();
    assert!(matches!(err, LoadError::ReplaceOccupied { .. }));
    assert!(mgr.sandbox("second").is_none(), "failed load left state behind");
    assert_eq!(mgr.attachments().len(), 6);
}

#[test]
fn descriptor_loading_is_atomic() {
    let stub = object("mov64 r0, 0\nexit");

    // Unknown hook in the second entry: nothing attaches at all.
    let desc =
        PluginDescriptor::parse("memory 64\na p add one.o\nmissing p add two.o").unwrap();
    let mut mgr = PluginManager::new();
    mgr.register_hook("a", HookConfig::default());
    let err = mgr
        .load_descriptor("ns", &desc, &mut |_| Some(stub.clone()))
        .unwrap_err();
    assert!(matches!(err, LoadError::UnknownHook(ref h) if h == "missing"));
    assert!(mgr.attachments().is_empty());
    assert!(mgr.sandbox("ns").is_none());

    let desc = PluginDescriptor::parse("memory 64\na p add one.o").unwrap();
    let err = mgr.load_descriptor("ns", &desc, &mut |_| None).unwrap_err();
    assert!(matches!(err, LoadError::MissingObject(ref o) if o == "one.o"));

    let err = mgr
        .load_descriptor("ns", &desc, &mut |_| Some(vec![1, 2, 3]))
        .unwrap_err();
    assert!(matches!(err, LoadError::Decode(_)));
    assert!(mgr.attachments().is_empty());
    assert!(mgr.sandbox("ns").is_none());
}
