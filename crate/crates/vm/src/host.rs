//! Host call table: the only door out of the sandbox.
//!
//! A `call imm` instruction looks up `imm` in the table registered by the
//! embedder and invokes it with the current r1..r5. An unknown call number
//! is a trap, never a silent no-op. Call numbers are stable constants; the
//! embedder decides which subset to expose on each dispatch.
//!
//! Host functions receive the calling plugin's sandbox so they can allocate
//! or copy data out. They may only dereference guest pointers into the heap
//! region; stack and input live in interpreter-local buffers by design.

use crate::mem::SandboxMemory;
use std::collections::BTreeMap;
use thiserror::Error;

pub const HC_GET: u32 = 1;
pub const HC_SET: u32 = 2;
pub const HC_ALLOC: u32 = 3;
pub const HC_LOG: u32 = 4;
pub const HC_SEND_SIGNAL_CELL: u32 = 5;
pub const HC_SCHEDULE_PADDING: u32 = 6;
pub const HC_SAMPLE_UNIFORM: u32 = 7;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HostCallError {
    #[error("access denied for field key {key:#x}")]
    AccessDenied { key: u64 },
    #[error("unknown field key {key:#x}")]
    UnknownKey { key: u64 },
    #[error("bad guest pointer {vaddr:#x}+{len}")]
    BadPointer { vaddr: u64, len: u64 },
    #[error("host rejected call: {0}")]
    Rejected(String),
}

pub type HostFn<'h> =
    Box<dyn FnMut(&mut SandboxMemory, [u64; 5]) -> Result<u64, HostCallError> + 'h>;

/// Call-number-indexed dispatch table. Built by the embedder per execution
/// context; the numbers themselves never change meaning across the process.
#[derive(Default)]
pub struct HostCallTable<'h> {
    funcs: BTreeMap<u32, HostFn<'h>>,
}

impl<'h> HostCallTable<'h> {
    pub fn new() -> Self {
        HostCallTable {
            funcs: BTreeMap::new(),
        }
    }

    /// Registers `f` under `call`, replacing any previous entry.
    pub fn register<F>(&mut self, call: u32, f: F)
    where
        F: FnMut(&mut SandboxMemory, [u64; 5]) -> Result<u64, HostCallError> + 'h,
    {
        self.funcs.insert(call, Box::new(f));
    }

    /// Wires `HC_ALLOC` to the sandbox bump allocator. A failed allocation
    /// returns 0 to the guest rather than trapping, so programs can branch
    /// on exhaustion.
    pub fn register_alloc(&mut self) {
        self.register(HC_ALLOC, |mem, args| Ok(mem.alloc(args[0]).unwrap_or(0)));
    }

    pub fn contains(&self, call: u32) -> bool {
        self.funcs.contains_key(&call)
    }

    pub(crate) fn invoke(
        &mut self,
        call: u32,
        mem: &mut SandboxMemory,
        args: [u64; 5],
    ) -> Option<Result<u64, HostCallError>> {
        self.funcs.get_mut(&call).map(|f| f(mem, args))
    }
}
