//! Per-namespace sandbox memory: a zeroed heap handed out by a bump
//! allocator, bounds-checked on every access.
//!
//! Guest virtual layout:
//!   heap           [0, heap_limit)
//!   stack          [STACK_BASE, STACK_BASE + STACK_SIZE), fresh per invocation
//!   input record   [INPUT_BASE, INPUT_BASE + input_len), read-only
//!
//! The heap buffer is surrounded by canary-painted guard zones so memory
//! fuzzing can assert that no bounds bug ever writes outside the region.

use thiserror::Error;

pub const STACK_SIZE: usize = 512;
pub const STACK_BASE: u64 = 0x2_0000_0000;
pub const INPUT_BASE: u64 = 0x3_0000_0000;

const CANARY_LEN: usize = 64;
const CANARY_BYTE: u8 = 0xc5;
const ALIGN: u64 = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocError {
    #[error("sandbox allocation of {requested} bytes exceeds remaining capacity {remaining}")]
    OutOfSandboxMemory { requested: u64, remaining: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("sandbox access fault at {vaddr:#x}+{len} (write={write})")]
pub struct MemFault {
    pub vaddr: u64,
    pub len: u64,
    pub write: bool,
}

/// One plugin namespace's memory zone. Never freed piecemeal: allocation is
/// a monotone bump, the whole zone drops with the namespace.
#[derive(Debug)]
pub struct SandboxMemory {
    buf: Vec<u8>,
    limit: u64,
    brk: u64,
}

impl SandboxMemory {
    pub fn new(heap_limit: u64) -> Self {
        let mut buf = vec![0u8; heap_limit as usize + 2 * CANARY_LEN];
        buf[..CANARY_LEN].fill(CANARY_BYTE);
        buf[CANARY_LEN + heap_limit as usize..].fill(CANARY_BYTE);
        SandboxMemory {
            buf,
            limit: heap_limit,
            brk: 0,
        }
    }

    pub fn heap_limit(&self) -> u64 {
        self.limit
    }

    /// Bytes handed out so far.
    pub fn allocated(&self) -> u64 {
        self.brk
    }

    /// Bump-allocates `len` bytes, 8-byte aligned and zeroed. There is no
    /// free: ranges stay valid for the life of the sandbox.
    pub fn alloc(&mut self, len: u64) -> Result<u64, AllocError> {
        let vaddr = self.brk;
        let rounded = len
            .checked_add(ALIGN - 1)
            .map(|v| v & !(ALIGN - 1))
            .ok_or(AllocError::OutOfSandboxMemory {
                requested: len,
                remaining: self.limit - self.brk,
            })?;
        if rounded > self.limit - self.brk {
            return Err(AllocError::OutOfSandboxMemory {
                requested: len,
                remaining: self.limit - self.brk,
            });
        }
        self.brk += rounded;
        Ok(vaddr)
    }

    fn check(&self, vaddr: u64, len: u64, write: bool) -> Result<usize, MemFault> {
        let fault = || MemFault { vaddr, len, write };
        let end = vaddr.checked_add(len).ok_or_else(fault)?;
        if end > self.limit {
            return Err(fault());
        }
        Ok(CANARY_LEN + vaddr as usize)
    }

    pub fn read(&self, vaddr: u64, len: u64) -> Result<&[u8], MemFault> {
        let start = self.check(vaddr, len, false)?;
        Ok(&self.buf[start..start + len as usize])
    }

    pub fn read_mut(&mut self, vaddr: u64, len: u64) -> Result<&mut [u8], MemFault> {
        let start = self.check(vaddr, len, true)?;
        Ok(&mut self.buf[start..start + len as usize])
    }

    pub fn write(&mut self, vaddr: u64, bytes: &[u8]) -> Result<(), MemFault> {
        self.read_mut(vaddr, bytes.len() as u64)?
            .copy_from_slice(bytes);
        Ok(())
    }

    /// True while the guard zones around the heap are untouched.
    pub fn canaries_intact(&self) -> bool {
        self.buf[..CANARY_LEN].iter().all(|&b| b == CANARY_BYTE)
            && self.buf[CANARY_LEN + self.limit as usize..]
                .iter()
                .all(|&b| b == CANARY_BYTE)
    }
}
