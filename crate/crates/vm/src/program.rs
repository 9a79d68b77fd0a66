//! Validated programs: the unit the loader caches and the interpreter runs.

use crate::insn::{self, Insn};
use thiserror::Error;

/// A decoded program plus the entry-point symbol it was assembled or loaded
/// under. Programs are immutable once validated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub insns: Vec<Insn>,
    pub symbol: String,
}

impl Program {
    pub fn new(insns: Vec<Insn>, symbol: impl Into<String>) -> Result<Self, ValidateError> {
        let p = Program {
            insns,
            symbol: symbol.into(),
        };
        validate(&p)?;
        Ok(p)
    }

    /// Byte length on the wire.
    pub fn byte_len(&self) -> usize {
        self.insns.len() * insn::INSN_SIZE
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidateError {
    #[error("program is empty")]
    EmptyProgram,
    #[error("unknown opcode {opcode:#04x} at instruction {pc}")]
    UnknownOpcode { pc: usize, opcode: u8 },
    #[error("register out of range at instruction {pc}")]
    RegisterOutOfRange { pc: usize },
    #[error("jump target out of range at instruction {pc}")]
    JumpOutOfRange { pc: usize },
    #[error("jump lands inside a wide immediate at instruction {pc}")]
    JumpIntoWideImmediate { pc: usize },
    #[error("lddw at instruction {pc} is missing its second slot")]
    DanglingWideImmediate { pc: usize },
    #[error("division by zero immediate at instruction {pc}")]
    ZeroImmediateDivisor { pc: usize },
    #[error("program can fall off the end (last instruction must be exit or ja)")]
    MissingExit,
}

/// Static checks: known opcodes, register indices <= 10, lddw pairing, jump
/// targets inside the program and never into an lddw continuation slot, no
/// zero immediate divisor, and no fall-through past the last instruction.
pub fn validate(p: &Program) -> Result<(), ValidateError> {
    let n = p.insns.len();
    if n == 0 {
        return Err(ValidateError::EmptyProgram);
    }

    // Mark lddw continuation slots first so jump checks can reject them.
    let mut is_continuation = vec![false; n];
    let mut pc = 0usize;
    while pc < n {
        let i = p.insns[pc];
        if i.opcode == insn::LDDW {
            if pc + 1 >= n {
                return Err(ValidateError::DanglingWideImmediate { pc });
            }
            is_continuation[pc + 1] = true;
            pc += 2;
        } else {
            pc += 1;
        }
    }

    for (pc, i) in p.insns.iter().enumerate() {
        if is_continuation[pc] {
            continue;
        }
        if !insn::is_known_opcode(i.opcode) {
            return Err(ValidateError::UnknownOpcode {
                pc,
                opcode: i.opcode,
            });
        }
        if i.dst > 10 || i.src > 10 {
            return Err(ValidateError::RegisterOutOfRange { pc });
        }
        let class = i.opcode & 0x07;
        let base = i.opcode & 0xf0;
        if (class == 0x04 || class == 0x07)
            && (base == 0x30 || base == 0x90)
            && i.opcode & 0x08 == 0
            && i.imm == 0
        {
            return Err(ValidateError::ZeroImmediateDivisor { pc });
        }
        let is_jump = class == 0x05 && i.opcode != insn::CALL && i.opcode != insn::EXIT;
        if is_jump {
            let target = pc as i64 + 1 + i.off as i64;
            if target < 0 || target >= n as i64 {
                return Err(ValidateError::JumpOutOfRange { pc });
            }
            if is_continuation[target as usize] {
                return Err(ValidateError::JumpIntoWideImmediate { pc });
            }
        }
    }

    // Execution must never run off the end: the final slot has to be exit or
    // an unconditional jump (conditional jumps fall through past the end).
    let last = p.insns[n - 1];
    let last_is_continuation = is_continuation[n - 1];
    if last_is_continuation || (last.opcode != insn::EXIT && last.opcode != insn::JA) {
        return Err(ValidateError::MissingExit);
    }
    Ok(())
}
