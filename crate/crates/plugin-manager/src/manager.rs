//! Attachment registry and dispatcher.
//!
//! Hooks are interned once by the embedder; plugins attach bytecode to
//! them either as `add` entries that run alongside the native behavior or
//! as a single `replace` entry that supersedes it. Every namespace gets
//! one sandbox shared by its attachments, decoded programs are cached by
//! content hash, and a faulting attachment is contained: it is logged,
//! yields value 0, and never takes the host or sibling attachments down.

use crate::descriptor::{AttachMode, DescriptorError, PluginDescriptor};
use crate::host::{keys, HostEnv};
use fan_vm::host::{
    HC_GET, HC_LOG, HC_SAMPLE_UNIFORM, HC_SCHEDULE_PADDING, HC_SEND_SIGNAL_CELL, HC_SET,
};
use fan_vm::{
    decode_program, execute_with_budget, DecodeError, HostCallError, HostCallTable, Program,
    SandboxMemory, Trap, ValidateError, DEFAULT_INSN_BUDGET,
};
use sha2::{Digest, Sha256};
use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

const MAX_LOG_BYTES: u64 = 4096;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error("hook `{0}` is not registered")]
    UnknownHook(String),
    #[error("object `{0}` was not found")]
    MissingObject(String),
    #[error("object does not decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("program failed validation: {0}")]
    Validate(#[from] ValidateError),
    #[error("hook `{hook}` already has a replace attachment")]
    ReplaceOccupied { hook: String },
}

/// Interned hook handle. Only the manager that issued it can resolve it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HookId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttachmentId(u64);

/// Per-hook policy, fixed at registration.
#[derive(Debug, Clone, Default)]
pub struct HookConfig {
    /// Whether the host has native behavior for this hook. A replace
    /// attachment supersedes it; otherwise dispatch reports it as due.
    pub has_default: bool,
    /// Tear the circuit down when nothing handles the event: no
    /// attachment ran and there is no native behavior.
    pub teardown_if_unhandled: bool,
    /// Field keys attachments on this hook may get/set.
    pub allowed_keys: Vec<u64>,
}

#[derive(Clone)]
struct Attachment {
    id: AttachmentId,
    namespace: String,
    protocol: String,
    param: Option<u64>,
    program: Arc<Program>,
}

struct HookSlot {
    name: String,
    has_default: bool,
    teardown_if_unhandled: bool,
    allowed_keys: BTreeSet<u64>,
    default_runs: u64,
    replace: Option<Attachment>,
    adds: Vec<Attachment>,
}

struct Namespace {
    memory: SandboxMemory,
    refs: usize,
}

/// Introspection row for one attachment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachmentInfo {
    pub id: AttachmentId,
    pub hook: String,
    pub namespace: String,
    pub protocol: String,
    pub param: Option<u64>,
    pub mode: AttachMode,
}

/// What one dispatch did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DispatchOutcome {
    /// Return value of the replace attachment; 0 when there is none or it
    /// faulted.
    pub value: u64,
    /// A replace attachment was present (even if it faulted).
    pub replaced: bool,
    /// The host's native behavior should run now.
    pub default_due: bool,
    /// Nothing handled the event on a teardown-marked hook.
    pub teardown: bool,
    /// Attachments that completed without fault.
    pub ran: usize,
    /// Attachments that faulted during this dispatch.
    pub faults: usize,
}

/// A contained plugin fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultRecord {
    pub attachment: AttachmentId,
    pub namespace: String,
    pub hook: String,
    pub trap: String,
}

pub struct PluginManager {
    slots: Vec<HookSlot>,
    by_name: BTreeMap<String, HookId>,
    namespaces: BTreeMap<String, Namespace>,
    cache: BTreeMap<[u8; 32], Arc<Program>>,
    cache_hits: u64,
    cache_misses: u64,
    next_attachment: u64,
    faults: Vec<FaultRecord>,
    budget: u64,
}

impl Default for PluginManager {
    fn default() -> Self {
        Self::new()
    }
}

impl PluginManager {
    pub fn new() -> Self {
        Self::with_budget(DEFAULT_INSN_BUDGET)
    }

    pub fn with_budget(budget: u64) -> Self {
        PluginManager {
            slots: Vec::new(),
            by_name: BTreeMap::new(),
            namespaces: BTreeMap::new(),
            cache: BTreeMap::new(),
            cache_hits: 0,
            cache_misses: 0,
            next_attachment: 0,
            faults: Vec::new(),
            budget,
        }
    }

    /// Interns a hook. Registering an existing name returns its id and
    /// leaves the original config in place.
    pub fn register_hook(&mut self, name: &str, config: HookConfig) -> HookId {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = HookId(self.slots.len());
        self.slots.push(HookSlot {
            name: name.to_string(),
            has_default: config.has_default,
            teardown_if_unhandled: config.teardown_if_unhandled,
            allowed_keys: config.allowed_keys.into_iter().collect(),
            default_runs: 0,
            replace: None,
            adds: Vec::new(),
        });
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn hook_id(&self, name: &str) -> Option<HookId> {
        self.by_name.get(name).copied()
    }

    pub fn hook_name(&self, id: HookId) -> &str {
        &self.slots[id.0].name
    }

    /// How often the native behavior ran (was reported due) for this hook.
    pub fn default_runs(&self, id: HookId) -> u64 {
        self.slots[id.0].default_runs
    }

    pub fn faults(&self) -> &[FaultRecord] {
        &self.faults
    }

    /// (hits, misses) of the decoded-program cache.
    pub fn cache_stats(&self) -> (u64, u64) {
        (self.cache_hits, self.cache_misses)
    }

    pub fn sandbox(&self, namespace: &str) -> Option<&SandboxMemory> {
        self.namespaces.get(namespace).map(|ns| &ns.memory)
    }

    pub fn attachments(&self) -> Vec<AttachmentInfo> {
        let mut out = Vec::new();
        for slot in &self.slots {
            for (att, mode) in slot
                .replace
                .iter()
                .map(|a| (a, AttachMode::Replace))
                .chain(slot.adds.iter().map(|a| (a, AttachMode::Add)))
            {
                out.push(AttachmentInfo {
                    id: att.id,
                    hook: slot.name.clone(),
                    namespace: att.namespace.clone(),
                    protocol: att.protocol.clone(),
                    param: att.param,
                    mode,
                });
            }
        }
        out
    }

    /// Decodes and validates an object, or returns the cached program for
    /// bytes already seen.
    pub fn load_program(&mut self, object: &[u8], symbol: &str) -> Result<Arc<Program>, LoadError> {
        let hash: [u8; 32] = Sha256::digest(object).into();
        if let Some(hit) = self.cache.get(&hash) {
            self.cache_hits += 1;
            return Ok(hit.clone());
        }
        let insns = decode_program(object)?;
        let program = Arc::new(Program::new(insns, symbol)?);
        self.cache.insert(hash, program.clone());
        self.cache_misses += 1;
        Ok(program)
    }

    /// Attaches one object. The namespace's sandbox is created on first
    /// attach with `memory` bytes of heap and shared afterwards.
    #[allow(clippy::too_many_arguments)]
    pub fn attach(
        &mut self,
        namespace: &str,
        memory: u64,
        hook: HookId,
        mode: AttachMode,
        protocol: &str,
        param: Option<u64>,
        object: &[u8],
    ) -> Result<AttachmentId, LoadError> {
        let program = self.load_program(object, &self.slots[hook.0].name.clone())?;
        self.attach_loaded(namespace, memory, hook, mode, protocol, param, program)
    }

    fn attach_loaded(
        &mut self,
        namespace: &str,
        memory: u64,
        hook: HookId,
        mode: AttachMode,
        protocol: &str,
        param: Option<u64>,
        program: Arc<Program>,
    ) -> Result<AttachmentId, LoadError> {
        if mode == AttachMode::Replace && self.slots[hook.0].replace.is_some() {
            return Err(LoadError::ReplaceOccupied {
                hook: self.slots[hook.0].name.clone(),
            });
        }
        let ns = self
            .namespaces
            .entry(namespace.to_string())
            .or_insert_with(|| Namespace {
                memory: SandboxMemory::new(memory),
                refs: 0,
            });
        ns.refs += 1;
        let id = AttachmentId(self.next_attachment);
        self.next_attachment += 1;
        let attachment = Attachment {
            id,
            namespace: namespace.to_string(),
            protocol: protocol.to_string(),
            param,
            program,
        };
        let slot = &mut self.slots[hook.0];
        match mode {
            AttachMode::Replace => slot.replace = Some(attachment),
            AttachMode::Add => slot.adds.push(attachment),
        }
        Ok(id)
    }

    /// Loads every entry point of a descriptor, or nothing on error.
    pub fn load_descriptor(
        &mut self,
        namespace: &str,
        descriptor: &PluginDescriptor,
        resolve: &mut dyn FnMut(&str) -> Option<Vec<u8>>,
    ) -> Result<Vec<AttachmentId>, LoadError> {
        let mut resolved = Vec::new();
        let mut replacing = BTreeSet::new();
        for entry in &descriptor.entries {
            let hook = self
                .hook_id(&entry.hook)
                .ok_or_else(|| LoadError::UnknownHook(entry.hook.clone()))?;
            let object =
                resolve(&entry.object).ok_or_else(|| LoadError::MissingObject(entry.object.clone()))?;
            let program = self.load_program(&object, &entry.object)?;
            if entry.mode == AttachMode::Replace
                && (self.slots[hook.0].replace.is_some() || !replacing.insert(hook))
            {
                return Err(LoadError::ReplaceOccupied {
                    hook: entry.hook.clone(),
                });
            }
            resolved.push((hook, entry, program));
        }
        let mut ids = Vec::with_capacity(resolved.len());
        for (hook, entry, program) in resolved {
            let id = self.attach_loaded(
                namespace,
                descriptor.memory,
                hook,
                entry.mode,
                &entry.protocol,
                entry.param,
                program,
            )?;
            ids.push(id);
        }
        Ok(ids)
    }

    /// Removes one attachment. The namespace sandbox is dropped with its
    /// last attachment.
    pub fn detach(&mut self, id: AttachmentId) -> bool {
        for slot in &mut self.slots {
            let namespace = if slot.replace.as_ref().is_some_and(|a| a.id == id) {
                let att = slot.replace.take().unwrap();
                att.namespace
            } else if let Some(pos) = slot.adds.iter().position(|a| a.id == id) {
                slot.adds.remove(pos).namespace
            } else {
                continue;
            };
            let ns = self
                .namespaces
                .get_mut(&namespace)
                .expect("attachment namespace exists");
            ns.refs -= 1;
            if ns.refs == 0 {
                self.namespaces.remove(&namespace);
            }
            return true;
        }
        false
    }

    /// Detaches everything in a namespace; returns how many attachments
    /// went away.
    pub fn unload_namespace(&mut self, namespace: &str) -> usize {
        let ids: Vec<AttachmentId> = self
            .attachments()
            .into_iter()
            .filter(|info| info.namespace == namespace)
            .map(|info| info.id)
            .collect();
        let count = ids.len();
        for id in ids {
            self.detach(id);
        }
        count
    }

    /// Runs the hook: the replace attachment (or the native default), then
    /// every add attachment in attach order. Faults are contained and
    /// logged; a faulted replace yields 0 and still suppresses the default.
    pub fn dispatch(
        &mut self,
        hook: HookId,
        env: &mut dyn HostEnv,
        input: &[u8],
    ) -> DispatchOutcome {
        let slot = &self.slots[hook.0];
        let hook_name = slot.name.clone();
        let allowed = slot.allowed_keys.clone();
        let plan: Vec<(Attachment, bool)> = slot
            .replace
            .iter()
            .map(|a| (a.clone(), true))
            .chain(slot.adds.iter().map(|a| (a.clone(), false)))
            .collect();

        let replaced = slot.replace.is_some();
        let mut outcome = DispatchOutcome {
            value: 0,
            replaced,
            default_due: !replaced && slot.has_default,
            teardown: plan.is_empty() && !slot.has_default && slot.teardown_if_unhandled,
            ran: 0,
            faults: 0,
        };
        if outcome.default_due {
            self.slots[hook.0].default_runs += 1;
        }

        for (att, is_replace) in plan {
            let ns = self
                .namespaces
                .get_mut(&att.namespace)
                .expect("attachment namespace exists");
            let result = run_one(
                &att.program,
                att.param,
                &allowed,
                &mut ns.memory,
                env,
                input,
                self.budget,
            );
            match result {
                Ok(value) => {
                    outcome.ran += 1;
                    if is_replace {
                        outcome.value = value;
                    }
                }
                Err(trap) => {
                    outcome.faults += 1;
                    self.faults.push(FaultRecord {
                        attachment: att.id,
                        namespace: att.namespace,
                        hook: hook_name.clone(),
                        trap: trap.to_string(),
                    });
                }
            }
        }
        outcome
    }
}

/// One attachment invocation: a fresh host call table bridging to the
/// environment, gated by the hook's key allowlist.
fn run_one(
    program: &Program,
    param: Option<u64>,
    allowed: &BTreeSet<u64>,
    memory: &mut SandboxMemory,
    env: &mut dyn HostEnv,
    input: &[u8],
    budget: u64,
) -> Result<u64, Trap> {
    let env = RefCell::new(env);
    let mut table = HostCallTable::new();
    table.register_alloc();
    table.register(HC_GET, |_, args| {
        let key = args[0];
        if key == keys::ATTACHMENT_PARAM {
            return Ok(param.unwrap_or(0));
        }
        if !allowed.contains(&key) {
            return Err(HostCallError::AccessDenied { key });
        }
        let nargs = args[1] as usize;
        if nargs > 3 {
            return Err(HostCallError::Rejected(
                "get takes at most three arguments".to_string(),
            ));
        }
        env.borrow_mut().get(key, &args[2..2 + nargs])
    });
    table.register(HC_SET, |_, args| {
        let key = args[0];
        if !allowed.contains(&key) {
            return Err(HostCallError::AccessDenied { key });
        }
        let nargs = args[1] as usize;
        if nargs > 2 {
            return Err(HostCallError::Rejected(
                "set takes at most two arguments".to_string(),
            ));
        }
        env.borrow_mut().set(key, &args[2..2 + nargs], args[2 + nargs])?;
        Ok(0)
    });
    table.register(HC_LOG, |mem, args| {
        let (vaddr, len) = (args[0], args[1]);
        if len > MAX_LOG_BYTES {
            return Err(HostCallError::Rejected("log message too long".to_string()));
        }
        let bytes = mem
            .read(vaddr, len)
            .map_err(|_| HostCallError::BadPointer { vaddr, len })?;
        env.borrow_mut().log(bytes);
        Ok(0)
    });
    table.register(HC_SEND_SIGNAL_CELL, |_, args| {
        env.borrow_mut().send_signal_cell(args[0])?;
        Ok(0)
    });
    table.register(HC_SCHEDULE_PADDING, |_, args| {
        env.borrow_mut().schedule_padding(args[0])?;
        Ok(0)
    });
    table.register(HC_SAMPLE_UNIFORM, |_, args| {
        let (lo, hi) = (args[0], args[1]);
        if hi < lo {
            return Err(HostCallError::Rejected("empty sample range".to_string()));
        }
        Ok(env.borrow_mut().sample_uniform(lo, hi))
    });
    execute_with_budget(program, memory, &mut table, input, budget)
}
