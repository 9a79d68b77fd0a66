//! The dropmark defense as an actual plugin bundle: six entry points of
//! assembled bytecode plus the descriptor that attaches them.
//!
//! The same bundle is loaded on the client and on the middle relay; each
//! side only ever dispatches the hooks its role fires, the rest stay idle.
//! The client half announces stream progress with in-band signal cells,
//! the relay half turns those signals into padding machine events and
//! emits the cover cells the machine asks for.

use std::collections::BTreeMap;

use fan_vm::{assemble, encode_program};

pub const MACHINE_INIT_HOOK: &str = "circpad_global_machine_init";
pub const CIRC_SETUP_HOOK: &str = "circpad_setup_machine_on_circ_add";
pub const EDGE_UNKNOWN_HOOK: &str = "relay_process_edge_unknown";
pub const CLIENT_BEGIN_HOOK: &str = "connedge_connection_ap_handshake_send_begin_add";
pub const CLIENT_CONNECTED_HOOK: &str = "connedge_received_connected_cell_add";
pub const PADDING_SEND_HOOK: &str = "circpad_send_padding_cell_for_callback_replace";

/// Machine id the bundle registers and later installs per circuit.
pub const DEFENSE_MACHINE: u64 = 1;

/// Signal parameters carried by the client's two connection-edge hooks.
pub const SIGNAL_ACTIVATE: u8 = 1;
pub const SIGNAL_BE_SILENT: u8 = 2;

/// The bundle's attachment descriptor: memory budget, then one entry
/// point per line.
pub const DESCRIPTOR: &str = "\
memory 16777216
circpad_global_machine_init protocol_circpad add circpad_dropmark_def.o
circpad_setup_machine_on_circ_add protocol_circpad add circpad_dropmark_circ_setup.o
relay_process_edge_unknown protocol_relay add circpad_dropmark_receive_sig.o
connedge_connection_ap_handshake_send_begin_add protocol_conn_edge param 1 add circpad_dropmark_send_sig.o
connedge_received_connected_cell_add protocol_conn_edge param 2 add circpad_dropmark_send_sig.o
circpad_send_padding_cell_for_callback_replace protocol_circpad replace circpad_dropmark_send_padding_cell.o
";

// Field keys: 0x10 registers a machine, 0x11 installs it on the current
// circuit, 0x12 feeds it an event. Host calls: 1 get, 2 set, 5 send a
// signal cell, 6 schedule padding.

const MACHINE_INIT_SRC: &str = "\
; register the dropmark defense machine with the host
mov64 r1, 0x10
mov64 r2, 0
mov64 r3, 1
call 2
mov64 r0, 1
exit
";

const CIRC_SETUP_SRC: &str = "\
; install the registered machine on the circuit being added
mov64 r1, 0x11
mov64 r2, 0
mov64 r3, 1
call 2
mov64 r0, 1
exit
";

const RECEIVE_SIG_SRC: &str = "\
; input: one byte, the signal parameter (1 activate, 2 be silent);
; anything else is not ours, return 0 so the relay forwards it
jeq r2, 0, drop
ldxb r3, [r1]
jeq r3, 1, activate
jeq r3, 2, silence
ja drop
activate:
mov64 r3, 5
ja feed
silence:
mov64 r3, 6
feed:
mov64 r1, 0x12
mov64 r2, 0
call 2
mov64 r0, 1
exit
drop:
mov64 r0, 0
exit
";

const SEND_SIG_SRC: &str = "\
; announce stream progress: send this attachment's parameter in-band
mov64 r1, 0
mov64 r2, 0
call 1
mov64 r1, r0
call 5
mov64 r0, 1
exit
";

const SEND_PADDING_CELL_SRC: &str = "\
; a padding timer fired: emit one cover cell right away
mov64 r1, 0
call 6
mov64 r0, 1
exit
";

/// Assembly sources of the bundle, keyed by the object names the
/// descriptor uses with a `.s` extension instead of `.o`.
pub fn sources() -> BTreeMap<String, &'static str> {
    let mut map = BTreeMap::new();
    map.insert("circpad_dropmark_def.s".into(), MACHINE_INIT_SRC);
    map.insert("circpad_dropmark_circ_setup.s".into(), CIRC_SETUP_SRC);
    map.insert("circpad_dropmark_receive_sig.s".into(), RECEIVE_SIG_SRC);
    map.insert("circpad_dropmark_send_sig.s".into(), SEND_SIG_SRC);
    map.insert(
        "circpad_dropmark_send_padding_cell.s".into(),
        SEND_PADDING_CELL_SRC,
    );
    map
}

/// Object files of the bundle, keyed by the names the descriptor uses.
pub fn objects() -> BTreeMap<String, Vec<u8>> {
    sources()
        .into_iter()
        .map(|(name, src)| {
            let program = assemble(src).expect("defense plugin source assembles");
            let name = name.strip_suffix(".s").unwrap();
            (format!("{name}.o"), encode_program(&program.insns))
        })
        .collect()
}
