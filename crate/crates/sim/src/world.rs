//! The event loop: four nodes on a line, one heap, one RNG.
//!
//! Node 0 is the client, 1 the guard, 2 the middle relay, 3 the exit; the
//! destination server lives inside the exit's reply delay. The middle is
//! where the defense runs: its plugin manager holds the bundle, its
//! per-circuit machine emits the padding, and its forwarding policy keeps
//! unexpected inbound cells away from clean circuits.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use fan_padding::{dropmark_defense_machine, Action, MachineEvent, MachineInstance, MachineSpec};
use fan_plugin_manager::{
    keys, DispatchOutcome, HookConfig, HookId, HostEnv, PluginDescriptor, PluginManager,
};
use fan_vm::HostCallError;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cell::{CellKind, Dir};
use crate::config::SimConfig;
use crate::defense;
use crate::detect;
use crate::metrics::{CircuitRecord, SimReport};

const CLIENT: u8 = 0;
const GUARD: u8 = 1;
const MIDDLE: u8 = 2;
const EXIT: u8 = 3;

#[derive(Debug, Clone, Copy)]
enum Ev {
    Launch { circuit: usize },
    Arrive { circuit: usize, node: u8, dir: Dir, kind: CellKind },
    SendBegin { circuit: usize },
    ServerReply { circuit: usize, kind: CellKind },
    Dropmark { circuit: usize, left: u32 },
    PaddingDue { circuit: usize, gen: u64 },
    PadEmit { circuit: usize },
}

/// Heap entry ordered by (time, insertion), earliest first.
struct Queued {
    time: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the maximum; invert for earliest-first.
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Circuit {
    malicious: bool,
    /// One-way latencies for client|guard, guard|middle, middle|exit.
    lat: [u64; 3],
    machine: Option<MachineInstance>,
    /// Bumped on every arm and cancel; stale timer events compare against
    /// it and die.
    pad_gen: u64,
    padding_sent: u64,
    padding_suppressed: u64,
    /// The middle has not seen stream establishment yet.
    middle_clean: bool,
    suppressed_inbound: u64,
    created_at: Option<u64>,
    connected_at: Option<u64>,
    /// (arrival, kind) for every cell the client received.
    inbound: Vec<(u64, CellKind)>,
    rounds_left: u32,
}

impl Circuit {
    fn new(malicious: bool, lat: [u64; 3]) -> Self {
        Circuit {
            malicious,
            lat,
            machine: None,
            pad_gen: 0,
            padding_sent: 0,
            padding_suppressed: 0,
            middle_clean: true,
            suppressed_inbound: 0,
            created_at: None,
            connected_at: None,
            inbound: Vec::new(),
            rounds_left: 0,
        }
    }
}

/// Everything the host environments mutate: queue, clock, RNG, circuits.
struct State {
    cfg: SimConfig,
    rng: ChaCha8Rng,
    now: u64,
    next_seq: u64,
    heap: BinaryHeap<Queued>,
    circuits: Vec<Circuit>,
    machines: BTreeMap<u64, Arc<MachineSpec>>,
    signals_leaked: u64,
}

impl State {
    fn push(&mut self, time: u64, ev: Ev) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Queued { time, seq, ev });
    }

    /// Puts a cell on the wire leaving `node` in direction `dir`.
    fn send(&mut self, circuit: usize, node: u8, dir: Dir, kind: CellKind) {
        let (next, link) = match dir {
            Dir::Out => (node + 1, node),
            Dir::In => (node - 1, node - 1),
        };
        let at = self.now + self.circuits[circuit].lat[link as usize];
        self.push(at, Ev::Arrive { circuit, node: next, dir, kind });
    }

    /// Feeds the circuit's padding machine, if any, and applies whatever
    /// it asks for. Stream establishment also flips the relay policy.
    fn feed_machine(&mut self, circuit: usize, ev: MachineEvent) {
        if ev == MachineEvent::BeSilent {
            self.circuits[circuit].middle_clean = false;
        }
        let actions = match self.circuits[circuit].machine.as_mut() {
            Some(machine) => machine.on_event(ev, &mut self.rng),
            None => return,
        };
        let mut armed = Vec::new();
        {
            let c = &mut self.circuits[circuit];
            for action in actions {
                match action {
                    Action::CancelScheduled => c.pad_gen += 1,
                    Action::SchedulePadding { delay_us } => {
                        c.pad_gen += 1;
                        armed.push((delay_us, c.pad_gen));
                    }
                }
            }
        }
        for (delay, gen) in armed {
            self.push(self.now + delay, Ev::PaddingDue { circuit, gen });
        }
    }
}

/// Host surface the middle relay exposes to its plugins.
struct MiddleEnv<'a> {
    st: &'a mut State,
    circuit: usize,
}

impl HostEnv for MiddleEnv<'_> {
    fn get(&mut self, key: u64, _args: &[u64]) -> Result<u64, HostCallError> {
        match key {
            keys::UTIL_CIRCUIT_IS_ORIGIN => Ok(0),
            _ => Err(HostCallError::UnknownKey { key }),
        }
    }

    fn set(&mut self, key: u64, _args: &[u64], value: u64) -> Result<(), HostCallError> {
        match key {
            keys::CIRCPAD_REGISTER_MACHINE => {
                if value != defense::DEFENSE_MACHINE {
                    return Err(HostCallError::Rejected("unknown machine id".into()));
                }
                self.st
                    .machines
                    .insert(value, Arc::new(dropmark_defense_machine()));
                Ok(())
            }
            keys::CIRCPAD_INSTALL_MACHINE => {
                let spec = self
                    .st
                    .machines
                    .get(&value)
                    .cloned()
                    .ok_or_else(|| HostCallError::Rejected("machine not registered".into()))?;
                self.st.circuits[self.circuit].machine = Some(MachineInstance::new(spec));
                Ok(())
            }
            keys::CIRCPAD_MACHINE_EVENT => {
                let ev = MachineEvent::from_code(value)
                    .ok_or_else(|| HostCallError::Rejected("bad machine event code".into()))?;
                self.st.feed_machine(self.circuit, ev);
                Ok(())
            }
            _ => Err(HostCallError::UnknownKey { key }),
        }
    }

    fn log(&mut self, _bytes: &[u8]) {}

    fn send_signal_cell(&mut self, _param: u64) -> Result<(), HostCallError> {
        Err(HostCallError::Rejected(
            "relays do not originate signal cells".into(),
        ))
    }

    fn schedule_padding(&mut self, delay_us: u64) -> Result<(), HostCallError> {
        let at = self.st.now + delay_us;
        self.st.push(at, Ev::PadEmit { circuit: self.circuit });
        Ok(())
    }

    fn sample_uniform(&mut self, lo: u64, hi: u64) -> u64 {
        self.st.rng.random_range(lo..=hi)
    }
}

/// Host surface the client exposes; only the signal path is live.
struct ClientEnv<'a> {
    st: &'a mut State,
    circuit: usize,
}

impl HostEnv for ClientEnv<'_> {
    fn get(&mut self, key: u64, _args: &[u64]) -> Result<u64, HostCallError> {
        match key {
            keys::UTIL_CIRCUIT_IS_ORIGIN => Ok(1),
            _ => Err(HostCallError::UnknownKey { key }),
        }
    }

    fn set(&mut self, key: u64, _args: &[u64], _value: u64) -> Result<(), HostCallError> {
        Err(HostCallError::UnknownKey { key })
    }

    fn log(&mut self, _bytes: &[u8]) {}

    fn send_signal_cell(&mut self, param: u64) -> Result<(), HostCallError> {
        let param = u8::try_from(param)
            .map_err(|_| HostCallError::Rejected("signal parameter out of range".into()))?;
        self.st
            .send(self.circuit, CLIENT, Dir::Out, CellKind::Signal(param));
        Ok(())
    }

    fn schedule_padding(&mut self, _delay_us: u64) -> Result<(), HostCallError> {
        Err(HostCallError::Rejected(
            "clients do not emit relay padding".into(),
        ))
    }

    fn sample_uniform(&mut self, lo: u64, hi: u64) -> u64 {
        self.st.rng.random_range(lo..=hi)
    }
}

#[derive(Clone, Copy)]
struct Hooks {
    machine_init: HookId,
    circ_setup: HookId,
    edge_unknown: HookId,
    client_begin: HookId,
    client_connected: HookId,
    padding_send: HookId,
}

fn register_hooks(mgr: &mut PluginManager) -> Hooks {
    Hooks {
        machine_init: mgr.register_hook(
            defense::MACHINE_INIT_HOOK,
            HookConfig {
                allowed_keys: vec![keys::CIRCPAD_REGISTER_MACHINE],
                ..HookConfig::default()
            },
        ),
        circ_setup: mgr.register_hook(
            defense::CIRC_SETUP_HOOK,
            HookConfig {
                allowed_keys: vec![keys::CIRCPAD_INSTALL_MACHINE],
                ..HookConfig::default()
            },
        ),
        edge_unknown: mgr.register_hook(
            defense::EDGE_UNKNOWN_HOOK,
            HookConfig {
                allowed_keys: vec![keys::CIRCPAD_MACHINE_EVENT],
                ..HookConfig::default()
            },
        ),
        client_begin: mgr.register_hook(defense::CLIENT_BEGIN_HOOK, HookConfig::default()),
        client_connected: mgr.register_hook(defense::CLIENT_CONNECTED_HOOK, HookConfig::default()),
        padding_send: mgr.register_hook(
            defense::PADDING_SEND_HOOK,
            HookConfig {
                has_default: true,
                ..HookConfig::default()
            },
        ),
    }
}

/// A configured world: one plugin manager per defended side plus the
/// event state. Consumed by [`Sim::run`].
pub struct Sim {
    client_mgr: PluginManager,
    middle_mgr: PluginManager,
    client_hooks: Hooks,
    middle_hooks: Hooks,
    st: State,
}

impl Sim {
    pub fn new(cfg: SimConfig) -> Self {
        let mut client_mgr = PluginManager::new();
        let mut middle_mgr = PluginManager::new();
        let client_hooks = register_hooks(&mut client_mgr);
        let middle_hooks = register_hooks(&mut middle_mgr);

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut circuits = Vec::with_capacity(cfg.circuits);
        for _ in 0..cfg.circuits {
            let malicious = rng.random_bool(cfg.malicious_fraction);
            let (lo, hi) = cfg.hop_latency_us;
            let lat = [
                rng.random_range(lo..=hi),
                rng.random_range(lo..=hi),
                rng.random_range(lo..=hi),
            ];
            circuits.push(Circuit::new(malicious, lat));
        }

        let mut sim = Sim {
            client_mgr,
            middle_mgr,
            client_hooks,
            middle_hooks,
            st: State {
                cfg,
                rng,
                now: 0,
                next_seq: 0,
                heap: BinaryHeap::new(),
                circuits,
                machines: BTreeMap::new(),
                signals_leaked: 0,
            },
        };
        if sim.st.cfg.defense {
            sim.load_defense();
        }
        sim
    }

    /// Loads the bundle on both sides and lets its init entry point
    /// register the padding machine with the relay.
    fn load_defense(&mut self) {
        let descriptor =
            PluginDescriptor::parse(defense::DESCRIPTOR).expect("bundle descriptor parses");
        let objects = defense::objects();
        let mut resolve = |name: &str| objects.get(name).cloned();
        self.client_mgr
            .load_descriptor("dropmark-defense", &descriptor, &mut resolve)
            .expect("bundle loads on the client");
        self.middle_mgr
            .load_descriptor("dropmark-defense", &descriptor, &mut resolve)
            .expect("bundle loads on the middle relay");

        let mut env = MiddleEnv { st: &mut self.st, circuit: usize::MAX };
        let out = self
            .middle_mgr
            .dispatch(self.middle_hooks.machine_init, &mut env, &[]);
        assert_eq!(out.faults, 0, "machine registration must not fault");
    }

    /// Runs every circuit to completion and summarizes.
    pub fn run(mut self) -> SimReport {
        for i in 0..self.st.circuits.len() {
            self.st.push(i as u64 * 1_000, Ev::Launch { circuit: i });
        }
        while let Some(q) = self.st.heap.pop() {
            debug_assert!(q.time >= self.st.now, "time went backwards");
            self.st.now = q.time;
            self.step(q.ev);
        }
        self.finish()
    }

    fn dispatch_client(&mut self, hook: HookId, circuit: usize, input: &[u8]) -> DispatchOutcome {
        let mut env = ClientEnv { st: &mut self.st, circuit };
        self.client_mgr.dispatch(hook, &mut env, input)
    }

    fn dispatch_middle(&mut self, hook: HookId, circuit: usize, input: &[u8]) -> DispatchOutcome {
        let mut env = MiddleEnv { st: &mut self.st, circuit };
        self.middle_mgr.dispatch(hook, &mut env, input)
    }

    fn step(&mut self, ev: Ev) {
        match ev {
            Ev::Launch { circuit } => {
                self.st.send(circuit, CLIENT, Dir::Out, CellKind::Create);
            }
            Ev::Arrive { circuit, node, dir, kind } => match node {
                CLIENT => self.client_arrive(circuit, kind),
                GUARD => self.st.send(circuit, GUARD, dir, kind),
                MIDDLE => self.middle_arrive(circuit, dir, kind),
                EXIT => self.exit_arrive(circuit, kind),
                _ => unreachable!("no such node"),
            },
            Ev::SendBegin { circuit } => {
                // The bundle's client half announces the BEGIN first, so
                // the signal rides ahead of the stream traffic.
                self.dispatch_client(self.client_hooks.client_begin, circuit, &[]);
                self.st.send(circuit, CLIENT, Dir::Out, CellKind::Begin);
            }
            Ev::ServerReply { circuit, kind } => {
                self.st.send(circuit, EXIT, Dir::In, kind);
            }
            Ev::Dropmark { circuit, left } => {
                self.st.send(circuit, EXIT, Dir::In, CellKind::Junk);
                if left > 1 {
                    let at = self.st.now + self.st.cfg.dropmark_spacing_us;
                    self.st.push(at, Ev::Dropmark { circuit, left: left - 1 });
                }
            }
            Ev::PaddingDue { circuit, gen } => {
                if self.st.circuits[circuit].pad_gen != gen {
                    return; // canceled or superseded
                }
                let out = self.dispatch_middle(self.middle_hooks.padding_send, circuit, &[]);
                if out.default_due {
                    // No replace attachment: native behavior emits directly.
                    MiddleEnv { st: &mut self.st, circuit }
                        .schedule_padding(0)
                        .expect("native padding emission");
                }
            }
            Ev::PadEmit { circuit } => {
                let cap = self.st.cfg.padding_cap;
                let c = &mut self.st.circuits[circuit];
                if c.padding_sent >= cap {
                    // No PaddingSent event either: the machine stalls at
                    // the cap instead of spinning.
                    c.padding_suppressed += 1;
                    return;
                }
                c.padding_sent += 1;
                self.st.send(circuit, MIDDLE, Dir::In, CellKind::Padding);
                self.st.feed_machine(circuit, MachineEvent::PaddingSent);
            }
        }
    }

    fn client_arrive(&mut self, circuit: usize, kind: CellKind) {
        let now = self.st.now;
        self.st.circuits[circuit].inbound.push((now, kind));
        match kind {
            CellKind::Created => {
                self.st.circuits[circuit].created_at = Some(now);
                let (lo, hi) = self.st.cfg.client_think_us;
                let think = self.st.rng.random_range(lo..=hi);
                self.st.push(now + think, Ev::SendBegin { circuit });
            }
            CellKind::Connected => {
                self.st.circuits[circuit].connected_at = Some(now);
                self.dispatch_client(self.client_hooks.client_connected, circuit, &[]);
                self.st.circuits[circuit].rounds_left = self.st.cfg.data_rounds;
                self.st.send(circuit, CLIENT, Dir::Out, CellKind::Data);
            }
            CellKind::Data => {
                let c = &mut self.st.circuits[circuit];
                c.rounds_left = c.rounds_left.saturating_sub(1);
                if c.rounds_left == 0 {
                    self.st.send(circuit, CLIENT, Dir::Out, CellKind::Close);
                } else {
                    self.st.send(circuit, CLIENT, Dir::Out, CellKind::Data);
                }
            }
            // Padding, junk and stray control cells end here; they were
            // already logged for the detector and the metrics.
            _ => {}
        }
    }

    fn middle_arrive(&mut self, circuit: usize, dir: Dir, kind: CellKind) {
        match dir {
            Dir::Out => match kind {
                CellKind::Create => {
                    self.dispatch_middle(self.middle_hooks.circ_setup, circuit, &[]);
                    self.st.send(circuit, MIDDLE, Dir::Out, kind);
                }
                CellKind::Signal(param) => {
                    let out =
                        self.dispatch_middle(self.middle_hooks.edge_unknown, circuit, &[param]);
                    if out.ran == 0 {
                        // Nothing consumed it; forward like a vanilla relay.
                        self.st.send(circuit, MIDDLE, Dir::Out, kind);
                    }
                }
                CellKind::Close => {
                    self.st.feed_machine(circuit, MachineEvent::CircuitClose);
                    self.st.send(circuit, MIDDLE, Dir::Out, kind);
                }
                _ => self.st.send(circuit, MIDDLE, Dir::Out, kind),
            },
            Dir::In => {
                let defended = self.st.cfg.defense;
                let c = &mut self.st.circuits[circuit];
                if defended && c.middle_clean && kind.suspicious_inbound() {
                    c.suppressed_inbound += 1;
                    return;
                }
                self.st.send(circuit, MIDDLE, Dir::In, kind);
            }
        }
    }

    fn exit_arrive(&mut self, circuit: usize, kind: CellKind) {
        match kind {
            CellKind::Create => {
                self.st.send(circuit, EXIT, Dir::In, CellKind::Created);
                if self.st.circuits[circuit].malicious && self.st.cfg.dropmark_cells > 0 {
                    let at = self.st.now + self.st.cfg.dropmark_lead_us;
                    let left = self.st.cfg.dropmark_cells;
                    self.st.push(at, Ev::Dropmark { circuit, left });
                }
            }
            CellKind::Begin => {
                let (lo, hi) = self.st.cfg.server_delay_us;
                let delay = self.st.rng.random_range(lo..=hi);
                self.st
                    .push(self.st.now + delay, Ev::ServerReply { circuit, kind: CellKind::Connected });
            }
            CellKind::Data => {
                let (lo, hi) = self.st.cfg.server_delay_us;
                let delay = self.st.rng.random_range(lo..=hi);
                self.st
                    .push(self.st.now + delay, Ev::ServerReply { circuit, kind: CellKind::Data });
            }
            CellKind::Signal(_) => self.st.signals_leaked += 1,
            // Close and anything else terminates at the exit.
            _ => {}
        }
    }

    fn finish(self) -> SimReport {
        let native_padding_runs = self.middle_mgr.default_runs(self.middle_hooks.padding_send)
            + self.client_mgr.default_runs(self.client_hooks.padding_send);
        let plugin_faults = self.middle_mgr.faults().len() + self.client_mgr.faults().len();
        let st = self.st;

        let mut records = Vec::with_capacity(st.circuits.len());
        let mut clean_violations = 0u64;
        let mut padding_suppressed = 0u64;
        let mut policy_suppressed = 0u64;
        for (id, c) in st.circuits.iter().enumerate() {
            // The detector's window: strictly between circuit creation
            // and stream establishment, as observed at the client.
            let lo = c.created_at.unwrap_or(0);
            let hi = c.connected_at.unwrap_or(u64::MAX);
            let window: Vec<u64> = c
                .inbound
                .iter()
                .filter(|(t, _)| *t > lo && *t < hi)
                .map(|(t, _)| *t)
                .collect();
            let flagged = detect::flagged(&window, &st.cfg.detector);

            let pads: Vec<u64> = c
                .inbound
                .iter()
                .filter(|(_, k)| *k == CellKind::Padding)
                .map(|(t, _)| *t)
                .collect();
            let cover_ms = if pads.len() >= 2 {
                (pads[pads.len() - 1] - pads[0]) / 1_000
            } else {
                0
            };
            clean_violations += c
                .inbound
                .iter()
                .filter(|(t, k)| *t > lo && *t < hi && *k != CellKind::Padding)
                .count() as u64;
            padding_suppressed += c.padding_suppressed;
            policy_suppressed += c.suppressed_inbound;

            records.push(CircuitRecord {
                circuit_id: id,
                malicious_exit: c.malicious,
                flagged,
                padding_cells: pads.len() as u64,
                cover_ms,
                cells_total: c.inbound.len() as u64,
            });
        }

        let malicious = records.iter().filter(|r| r.malicious_exit).count();
        let benign = records.len() - malicious;
        let rate = |hits: usize, total: usize| {
            if total == 0 {
                0.0
            } else {
                hits as f64 / total as f64
            }
        };
        let tpr = rate(
            records.iter().filter(|r| r.malicious_exit && r.flagged).count(),
            malicious,
        );
        let fpr = rate(
            records.iter().filter(|r| !r.malicious_exit && r.flagged).count(),
            benign,
        );
        let covered: Vec<u64> = records
            .iter()
            .filter(|r| r.padding_cells >= 2)
            .map(|r| r.cover_ms)
            .collect();
        let mean_cover_ms = if covered.is_empty() {
            0.0
        } else {
            covered.iter().sum::<u64>() as f64 / covered.len() as f64
        };
        let max_padding_cells = records.iter().map(|r| r.padding_cells).max().unwrap_or(0);

        SimReport {
            records,
            malicious,
            benign,
            tpr,
            fpr,
            mean_cover_ms,
            max_padding_cells,
            padding_suppressed,
            clean_violations,
            policy_suppressed,
            signals_leaked: st.signals_leaked,
            native_padding_runs,
            plugin_faults,
        }
    }
}

/// Builds a world from `cfg` and runs it to completion.
pub fn run(cfg: &SimConfig) -> SimReport {
    Sim::new(*cfg).run()
}
