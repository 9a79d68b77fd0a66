//! Bytecode interpreter.
//!
//! Executes a validated program against a sandbox heap, a fresh 512-byte
//! stack and an optional read-only input record, under an instruction
//! budget. Arithmetic wraps; division and remainder are unsigned and trap on
//! zero; shift counts are masked to the operand width. Every memory access
//! is bounds-checked against exactly three regions (heap, stack, input) and
//! anything else traps.

use crate::host::{HostCallError, HostCallTable};
use crate::insn::{self, Insn};
use crate::mem::{SandboxMemory, INPUT_BASE, STACK_BASE, STACK_SIZE};
use crate::program::Program;
use thiserror::Error;

/// Default per-invocation instruction budget.
pub const DEFAULT_INSN_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Trap {
    #[error("sandbox fault at pc {pc}: {vaddr:#x}+{len} (write={write})")]
    SandboxFault {
        pc: usize,
        vaddr: u64,
        len: u64,
        write: bool,
    },
    #[error("division by zero at pc {pc}")]
    DivisionByZero { pc: usize },
    #[error("instruction budget of {budget} exhausted")]
    BudgetExceeded { budget: u64 },
    #[error("unknown host call {call} at pc {pc}")]
    UnknownHostCall { pc: usize, call: u32 },
    #[error("host call {call} failed at pc {pc}: {source}")]
    HostCall {
        pc: usize,
        call: u32,
        source: HostCallError,
    },
    #[error("program counter escaped program bounds at pc {pc}")]
    PcOutOfBounds { pc: usize },
    #[error("illegal instruction at pc {pc}")]
    IllegalInstruction { pc: usize },
}

/// Runs `program` to `exit` and returns r0, under the default budget.
pub fn execute(
    program: &Program,
    ctx: &mut SandboxMemory,
    host: &mut HostCallTable,
    input: &[u8],
) -> Result<u64, Trap> {
    execute_with_budget(program, ctx, host, input, DEFAULT_INSN_BUDGET)
}

enum Region {
    Heap,
    Stack,
    Input,
}

fn region_of(vaddr: u64, len: u64, heap_limit: u64, input_len: u64) -> Option<(Region, usize)> {
    let end = vaddr.checked_add(len)?;
    if end <= heap_limit {
        return Some((Region::Heap, vaddr as usize));
    }
    if vaddr >= STACK_BASE && end <= STACK_BASE + STACK_SIZE as u64 {
        return Some((Region::Stack, (vaddr - STACK_BASE) as usize));
    }
    if input_len > 0 && vaddr >= INPUT_BASE && end <= INPUT_BASE + input_len {
        return Some((Region::Input, (vaddr - INPUT_BASE) as usize));
    }
    None
}

pub fn execute_with_budget(
    program: &Program,
    ctx: &mut SandboxMemory,
    host: &mut HostCallTable,
    input: &[u8],
    budget: u64,
) -> Result<u64, Trap> {
    let insns = &program.insns;
    let n = insns.len();
    let mut reg = [0u64; 11];
    let mut stack = [0u8; STACK_SIZE];
    reg[10] = STACK_BASE + STACK_SIZE as u64;
    if !input.is_empty() {
        reg[1] = INPUT_BASE;
        reg[2] = input.len() as u64;
    }

    let heap_limit = ctx.heap_limit();
    let input_len = input.len() as u64;

    let load = |ctx: &SandboxMemory, stack: &[u8], pc: usize, vaddr: u64, w: u64| -> Result<u64, Trap> {
        let fault = Trap::SandboxFault {
            pc,
            vaddr,
            len: w,
            write: false,
        };
        let (region, off) = region_of(vaddr, w, heap_limit, input_len).ok_or(fault)?;
        let bytes: &[u8] = match region {
            Region::Heap => ctx.read(vaddr, w).map_err(|_| Trap::SandboxFault {
                pc,
                vaddr,
                len: w,
                write: false,
            })?,
            Region::Stack => &stack[off..off + w as usize],
            Region::Input => &input[off..off + w as usize],
        };
        let mut buf = [0u8; 8];
        buf[..w as usize].copy_from_slice(bytes);
        Ok(u64::from_le_bytes(buf))
    };

    let mut pc = 0usize;
    let mut steps = 0u64;
    loop {
        if pc >= n {
            return Err(Trap::PcOutOfBounds { pc });
        }
        if steps >= budget {
            return Err(Trap::BudgetExceeded { budget });
        }
        steps += 1;
        let i = insns[pc];
        let dst = i.dst as usize;
        let src = i.src as usize;
        let imm64 = i.imm as i64 as u64;
        match i.opcode {
            insn::LDDW => {
                if pc + 1 >= n {
                    return Err(Trap::IllegalInstruction { pc });
                }
                let lo = insns[pc].imm as u32 as u64;
                let hi = insns[pc + 1].imm as u32 as u64;
                reg[dst] = lo | (hi << 32);
                pc += 2;
                continue;
            }

            insn::LDXB => reg[dst] = load(ctx, &stack, pc, reg[src].wrapping_add(i.off as i64 as u64), 1)?,
            insn::LDXH => reg[dst] = load(ctx, &stack, pc, reg[src].wrapping_add(i.off as i64 as u64), 2)?,
            insn::LDXW => reg[dst] = load(ctx, &stack, pc, reg[src].wrapping_add(i.off as i64 as u64), 4)?,
            insn::LDXDW => reg[dst] = load(ctx, &stack, pc, reg[src].wrapping_add(i.off as i64 as u64), 8)?,

            insn::STB | insn::STH | insn::STW | insn::STDW | insn::STXB | insn::STXH
            | insn::STXW | insn::STXDW => {
                let (w, value) = match i.opcode {
                    insn::STB => (1u64, imm64),
                    insn::STH => (2, imm64),
                    insn::STW => (4, imm64),
                    insn::STDW => (8, imm64),
                    insn::STXB => (1, reg[src]),
                    insn::STXH => (2, reg[src]),
                    insn::STXW => (4, reg[src]),
                    _ => (8, reg[src]),
                };
                let vaddr = reg[dst].wrapping_add(i.off as i64 as u64);
                let fault = Trap::SandboxFault {
                    pc,
                    vaddr,
                    len: w,
                    write: true,
                };
                let (region, off) = region_of(vaddr, w, heap_limit, input_len).ok_or(fault)?;
                let bytes = &value.to_le_bytes()[..w as usize];
                match region {
                    Region::Heap => ctx.write(vaddr, bytes).map_err(|_| Trap::SandboxFault {
                        pc,
                        vaddr,
                        len: w,
                        write: true,
                    })?,
                    Region::Stack => stack[off..off + w as usize].copy_from_slice(bytes),
                    // The input record is read-only.
                    Region::Input => {
                        return Err(Trap::SandboxFault {
                            pc,
                            vaddr,
                            len: w,
                            write: true,
                        })
                    }
                }
            }

            // 64-bit ALU
            insn::ADD64_IMM => reg[dst] = reg[dst].wrapping_add(imm64),
            insn::ADD64_REG => reg[dst] = reg[dst].wrapping_add(reg[src]),
            insn::SUB64_IMM => reg[dst] = reg[dst].wrapping_sub(imm64),
            insn::SUB64_REG => reg[dst] = reg[dst].wrapping_sub(reg[src]),
            insn::MUL64_IMM => reg[dst] = reg[dst].wrapping_mul(imm64),
            insn::MUL64_REG => reg[dst] = reg[dst].wrapping_mul(reg[src]),
            insn::DIV64_IMM | insn::DIV64_REG | insn::MOD64_IMM | insn::MOD64_REG => {
                let b = if i.opcode & 0x08 == 0 { imm64 } else { reg[src] };
                if b == 0 {
                    return Err(Trap::DivisionByZero { pc });
                }
                let a = reg[dst];
                reg[dst] = if i.opcode & 0xf0 == 0x30 { a / b } else { a % b };
            }
            insn::OR64_IMM => reg[dst] |= imm64,
            insn::OR64_REG => reg[dst] |= reg[src],
            insn::AND64_IMM => reg[dst] &= imm64,
            insn::AND64_REG => reg[dst] &= reg[src],
            insn::LSH64_IMM => reg[dst] = reg[dst].wrapping_shl(i.imm as u32),
            insn::LSH64_REG => reg[dst] = reg[dst].wrapping_shl(reg[src] as u32),
            insn::RSH64_IMM => reg[dst] = reg[dst].wrapping_shr(i.imm as u32),
            insn::RSH64_REG => reg[dst] = reg[dst].wrapping_shr(reg[src] as u32),
            insn::NEG64 => reg[dst] = reg[dst].wrapping_neg(),
            insn::XOR64_IMM => reg[dst] ^= imm64,
            insn::XOR64_REG => reg[dst] ^= reg[src],
            insn::MOV64_IMM => reg[dst] = imm64,
            insn::MOV64_REG => reg[dst] = reg[src],
            insn::ARSH64_IMM => reg[dst] = ((reg[dst] as i64) >> (i.imm as u32 & 63)) as u64,
            insn::ARSH64_REG => reg[dst] = ((reg[dst] as i64) >> (reg[src] as u32 & 63)) as u64,

            // 32-bit ALU: operands truncate, results zero-extend.
            insn::ADD32_IMM => reg[dst] = (reg[dst] as u32).wrapping_add(i.imm as u32) as u64,
            insn::ADD32_REG => reg[dst] = (reg[dst] as u32).wrapping_add(reg[src] as u32) as u64,
            insn::SUB32_IMM => reg[dst] = (reg[dst] as u32).wrapping_sub(i.imm as u32) as u64,
            insn::SUB32_REG => reg[dst] = (reg[dst] as u32).wrapping_sub(reg[src] as u32) as u64,
            insn::MUL32_IMM => reg[dst] = (reg[dst] as u32).wrapping_mul(i.imm as u32) as u64,
            insn::MUL32_REG => reg[dst] = (reg[dst] as u32).wrapping_mul(reg[src] as u32) as u64,
            insn::DIV32_IMM | insn::DIV32_REG | insn::MOD32_IMM | insn::MOD32_REG => {
                let b = if i.opcode & 0x08 == 0 {
                    i.imm as u32
                } else {
                    reg[src] as u32
                };
                if b == 0 {
                    return Err(Trap::DivisionByZero { pc });
                }
                let a = reg[dst] as u32;
                reg[dst] = if i.opcode & 0xf0 == 0x30 { a / b } else { a % b } as u64;
            }
            insn::OR32_IMM => reg[dst] = ((reg[dst] as u32) | i.imm as u32) as u64,
            insn::OR32_REG => reg[dst] = ((reg[dst] as u32) | reg[src] as u32) as u64,
            insn::AND32_IMM => reg[dst] = ((reg[dst] as u32) & i.imm as u32) as u64,
            insn::AND32_REG => reg[dst] = ((reg[dst] as u32) & reg[src] as u32) as u64,
            insn::LSH32_IMM => reg[dst] = (reg[dst] as u32).wrapping_shl(i.imm as u32) as u64,
            insn::LSH32_REG => reg[dst] = (reg[dst] as u32).wrapping_shl(reg[src] as u32) as u64,
            insn::RSH32_IMM => reg[dst] = (reg[dst] as u32).wrapping_shr(i.imm as u32) as u64,
            insn::RSH32_REG => reg[dst] = (reg[dst] as u32).wrapping_shr(reg[src] as u32) as u64,
            insn::NEG32 => reg[dst] = (reg[dst] as u32).wrapping_neg() as u64,
            insn::XOR32_IMM => reg[dst] = ((reg[dst] as u32) ^ i.imm as u32) as u64,
            insn::XOR32_REG => reg[dst] = ((reg[dst] as u32) ^ reg[src] as u32) as u64,
            insn::MOV32_IMM => reg[dst] = i.imm as u32 as u64,
            insn::MOV32_REG => reg[dst] = reg[src] as u32 as u64,
            insn::ARSH32_IMM => {
                reg[dst] = (((reg[dst] as u32 as i32) >> (i.imm as u32 & 31)) as u32) as u64
            }
            insn::ARSH32_REG => {
                reg[dst] = (((reg[dst] as u32 as i32) >> (reg[src] as u32 & 31)) as u32) as u64
            }

            // Jumps (64-bit comparisons)
            insn::JA => {
                pc = jump(pc, i);
                continue;
            }
            insn::JEQ_IMM | insn::JEQ_REG | insn::JGT_IMM | insn::JGT_REG | insn::JGE_IMM
            | insn::JGE_REG | insn::JSET_IMM | insn::JSET_REG | insn::JNE_IMM | insn::JNE_REG
            | insn::JSGT_IMM | insn::JSGT_REG | insn::JSGE_IMM | insn::JSGE_REG
            | insn::JLT_IMM | insn::JLT_REG | insn::JLE_IMM | insn::JLE_REG | insn::JSLT_IMM
            | insn::JSLT_REG | insn::JSLE_IMM | insn::JSLE_REG => {
                let a = reg[dst];
                let b = if i.opcode & 0x08 == 0 { imm64 } else { reg[src] };
                let taken = match i.opcode & 0xf0 {
                    0x10 => a == b,
                    0x20 => a > b,
                    0x30 => a >= b,
                    0x40 => a & b != 0,
                    0x50 => a != b,
                    0x60 => (a as i64) > (b as i64),
                    0x70 => (a as i64) >= (b as i64),
                    0xa0 => a < b,
                    0xb0 => a <= b,
                    0xc0 => (a as i64) < (b as i64),
                    _ => (a as i64) <= (b as i64),
                };
                if taken {
                    pc = jump(pc, i);
                    continue;
                }
            }

            insn::CALL => {
                let call = i.imm as u32;
                let args = [reg[1], reg[2], reg[3], reg[4], reg[5]];
                match host.invoke(call, ctx, args) {
                    None => return Err(Trap::UnknownHostCall { pc, call }),
                    Some(Err(source)) => return Err(Trap::HostCall { pc, call, source }),
                    Some(Ok(v)) => reg[0] = v,
                }
            }
            insn::EXIT => return Ok(reg[0]),
            _ => return Err(Trap::IllegalInstruction { pc }),
        }
        pc += 1;
    }
}

fn jump(pc: usize, i: Insn) -> usize {
    (pc as i64 + 1 + i.off as i64) as usize
}
