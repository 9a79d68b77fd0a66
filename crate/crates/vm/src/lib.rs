//! A sandboxed register virtual machine for network plugins.
//!
//! The instruction set is a subset of eBPF: 11 registers, 64-bit wrapping
//! arithmetic with a 32-bit variant, loads and stores into a bounded
//! sandbox, conditional jumps, and a numbered host-call interface. Programs
//! are validated before execution (register bounds, jump targets, zero
//! immediate divisors, terminating slot) and then interpreted under an
//! instruction budget, so a hostile or buggy plugin can stall or corrupt
//! nothing outside its own sandbox.
//!
//! Memory is split into three virtual regions: a per-execution guest heap
//! starting at address zero, a 512-byte stack, and a read-only input window
//! holding whatever the embedder passed for this invocation. Host calls are
//! dispatched through a [`host::HostCallTable`] built by the embedder.

pub mod asm;
pub mod host;
pub mod insn;
pub mod interp;
pub mod mem;
pub mod program;

pub use asm::{assemble, assemble_named, disassemble, AsmError, AsmErrorKind};
pub use host::{HostCallError, HostCallTable};
pub use insn::{decode_program, encode_program, DecodeError, Insn, INSN_SIZE};
pub use interp::{execute, execute_with_budget, Trap, DEFAULT_INSN_BUDGET};
pub use mem::{AllocError, MemFault, SandboxMemory, INPUT_BASE, STACK_BASE, STACK_SIZE};
pub use program::{validate, Program, ValidateError};
