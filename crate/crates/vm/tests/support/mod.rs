//! Test support shared by the VM test suite and the workspace acceptance
//! suite (pulled in by `#[path]`): an arbitrary-precision reference
//! evaluator for ALU programs, plus seeded program generators.
//!
//! The evaluator is intentionally written against `num_bigint` arithmetic
//! reduced mod 2^64 / 2^32 instead of native wrapping integers, so it shares
//! no arithmetic shortcuts with the interpreter it checks.

// Each test target compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use fan_vm::insn::{self, Insn};
use num_bigint::BigInt;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleOutcome {
    Value(u64),
    DivByZero,
}

fn m64() -> BigInt {
    BigInt::from(1u8) << 64
}

fn m32() -> BigInt {
    BigInt::from(1u8) << 32
}

fn to_u64(v: &BigInt) -> u64 {
    let reduced = ((v % m64()) + m64()) % m64();
    let (_, digits) = reduced.to_u64_digits();
    digits.first().copied().unwrap_or(0)
}

fn signed64(v: &BigInt) -> BigInt {
    let u = ((v % m64()) + m64()) % m64();
    if u >= m64() >> 1 {
        u - m64()
    } else {
        u
    }
}

fn signed32(v: &BigInt) -> BigInt {
    let u = ((v % m32()) + m32()) % m32();
    if u >= m32() >> 1 {
        u - m32()
    } else {
        u
    }
}

/// Evaluates a straight-line ALU program (`lddw`, ALU64/ALU32, `exit`) over
/// arbitrary-precision registers. Returns the value of r0 at `exit`.
pub fn eval_alu_program(insns: &[Insn], init: [u64; 11]) -> OracleOutcome {
    let mut r: Vec<BigInt> = init.iter().map(|&v| BigInt::from(v)).collect();
    let mut pc = 0usize;
    while pc < insns.len() {
        let i = insns[pc];
        let dst = i.dst as usize;
        // Immediates are 32-bit and sign-extend for 64-bit ALU forms.
        let imm = BigInt::from(i.imm as i64);
        let reg_src = r[i.src as usize].clone();
        let is_imm_form = i.opcode & 0x08 == 0;
        let b = if is_imm_form { imm } else { reg_src };
        let a = r[dst].clone();
        match i.opcode {
            insn::LDDW => {
                let lo = insns[pc].imm as u32 as u64;
                let hi = insns[pc + 1].imm as u32 as u64;
                r[dst] = BigInt::from(lo | (hi << 32));
                pc += 2;
                continue;
            }
            insn::EXIT => return OracleOutcome::Value(to_u64(&r[0])),

            insn::ADD64_IMM | insn::ADD64_REG => r[dst] = a + b,
            insn::SUB64_IMM | insn::SUB64_REG => r[dst] = a - b,
            insn::MUL64_IMM | insn::MUL64_REG => r[dst] = a * b,
            insn::DIV64_IMM | insn::DIV64_REG => {
                let bu = to_u64(&b);
                if bu == 0 {
                    return OracleOutcome::DivByZero;
                }
                r[dst] = BigInt::from(to_u64(&a) / bu);
            }
            insn::MOD64_IMM | insn::MOD64_REG => {
                let bu = to_u64(&b);
                if bu == 0 {
                    return OracleOutcome::DivByZero;
                }
                r[dst] = BigInt::from(to_u64(&a) % bu);
            }
            insn::OR64_IMM | insn::OR64_REG => {
                r[dst] = BigInt::from(to_u64(&a) | to_u64(&b))
            }
            insn::AND64_IMM | insn::AND64_REG => {
                r[dst] = BigInt::from(to_u64(&a) & to_u64(&b))
            }
            insn::XOR64_IMM | insn::XOR64_REG => {
                r[dst] = BigInt::from(to_u64(&a) ^ to_u64(&b))
            }
            insn::LSH64_IMM | insn::LSH64_REG => {
                r[dst] = BigInt::from(to_u64(&a)) << (to_u64(&b) & 63) as usize
            }
            insn::RSH64_IMM | insn::RSH64_REG => {
                r[dst] = BigInt::from(to_u64(&a)) >> (to_u64(&b) & 63) as usize
            }
            // BigInt shr on a negative value rounds toward negative
            // infinity, which is exactly two's-complement arithmetic shift.
            insn::ARSH64_IMM | insn::ARSH64_REG => {
                r[dst] = signed64(&a) >> (to_u64(&b) & 63) as usize
            }
            insn::NEG64 => r[dst] = -a,
            insn::MOV64_IMM | insn::MOV64_REG => r[dst] = b,

            insn::ADD32_IMM | insn::ADD32_REG => r[dst] = a + b,
            insn::SUB32_IMM | insn::SUB32_REG => r[dst] = a - b,
            insn::MUL32_IMM | insn::MUL32_REG => {
                r[dst] = (a % m32()) * (b % m32())
            }
            insn::DIV32_IMM | insn::DIV32_REG => {
                let bu = to_u64(&b) as u32;
                if bu == 0 {
                    return OracleOutcome::DivByZero;
                }
                r[dst] = BigInt::from(to_u64(&a) as u32 / bu);
            }
            insn::MOD32_IMM | insn::MOD32_REG => {
                let bu = to_u64(&b) as u32;
                if bu == 0 {
                    return OracleOutcome::DivByZero;
                }
                r[dst] = BigInt::from(to_u64(&a) as u32 % bu);
            }
            insn::OR32_IMM | insn::OR32_REG => {
                r[dst] = BigInt::from((to_u64(&a) as u32) | (to_u64(&b) as u32))
            }
            insn::AND32_IMM | insn::AND32_REG => {
                r[dst] = BigInt::from((to_u64(&a) as u32) & (to_u64(&b) as u32))
            }
            insn::XOR32_IMM | insn::XOR32_REG => {
                r[dst] = BigInt::from((to_u64(&a) as u32) ^ (to_u64(&b) as u32))
            }
            insn::LSH32_IMM | insn::LSH32_REG => {
                r[dst] = (BigInt::from(to_u64(&a) as u32)
                    << (to_u64(&b) & 31) as usize)
                    % m32()
            }
            insn::RSH32_IMM | insn::RSH32_REG => {
                r[dst] = BigInt::from(to_u64(&a) as u32) >> (to_u64(&b) & 31) as usize
            }
            insn::ARSH32_IMM | insn::ARSH32_REG => {
                r[dst] = signed32(&a) >> (to_u64(&b) & 31) as usize
            }
            insn::NEG32 => r[dst] = -BigInt::from(to_u64(&a) as u32),
            insn::MOV32_IMM | insn::MOV32_REG => r[dst] = b,
            other => panic!("oracle fed a non-ALU opcode {other:#x} at {pc}"),
        }
        // Canonicalize to the unsigned residue so bitwise ops stay simple.
        let class32 = matches!(i.opcode & 0x07, 0x04);
        let modulus = if class32 { m32() } else { m64() };
        r[dst] = ((r[dst].clone() % &modulus) + &modulus) % &modulus;
        pc += 1;
    }
    panic!("program ran off the end without exit");
}

const ALU_BINARY_BASES: [u8; 12] = [
    0x00, // add
    0x10, // sub
    0x20, // mul
    0x30, // div
    0x40, // or
    0x50, // and
    0x60, // lsh
    0x70, // rsh
    0x90, // mod
    0xa0, // xor
    0xb0, // mov
    0xc0, // arsh
];

/// Generates a random straight-line ALU program: an `lddw` preamble seeding
/// r0..r9 followed by `ops` random ALU instructions and `exit`.
pub fn random_alu_program(rng: &mut ChaCha8Rng, ops: usize) -> Vec<Insn> {
    let mut insns = Vec::new();
    for reg in 0..10u8 {
        push_lddw(&mut insns, reg, rng.random());
    }
    for _ in 0..ops {
        let base = ALU_BINARY_BASES[rng.random_range(0..ALU_BINARY_BASES.len())];
        let class: u8 = if rng.random_bool(0.5) { 0x07 } else { 0x04 };
        let dst = rng.random_range(0..10u8);
        let reg_form = rng.random_bool(0.5);
        let is_div = base == 0x30 || base == 0x90;
        if rng.random_range(0..12u8) == 0 {
            // occasional unary negate
            insns.push(Insn {
                opcode: 0x80 | class,
                dst,
                src: 0,
                off: 0,
                imm: 0,
            });
            continue;
        }
        if reg_form {
            insns.push(Insn {
                opcode: base | 0x08 | class,
                dst,
                src: rng.random_range(0..10u8),
                off: 0,
                imm: 0,
            });
        } else {
            let mut imm: i32 = rng.random();
            if is_div && imm == 0 {
                imm = 1;
            }
            insns.push(Insn {
                opcode: base | class,
                dst,
                src: 0,
                off: 0,
                imm,
            });
        }
    }
    insns.push(Insn {
        opcode: insn::EXIT,
        dst: 0,
        src: 0,
        off: 0,
        imm: 0,
    });
    insns
}

pub fn push_lddw(insns: &mut Vec<Insn>, dst: u8, value: u64) {
    insns.push(Insn {
        opcode: insn::LDDW,
        dst,
        src: 0,
        off: 0,
        imm: value as u32 as i32,
    });
    insns.push(Insn {
        opcode: 0,
        dst: 0,
        src: 0,
        off: 0,
        imm: (value >> 32) as u32 as i32,
    });
}

const MEM_OPS: [u8; 12] = [
    insn::LDXB,
    insn::LDXH,
    insn::LDXW,
    insn::LDXDW,
    insn::STB,
    insn::STH,
    insn::STW,
    insn::STDW,
    insn::STXB,
    insn::STXH,
    insn::STXW,
    insn::STXDW,
];

/// Generates a random but *valid* program mixing ALU, memory and forward
/// jumps; used for sandbox-containment fuzzing. Most generated addresses are
/// junk on purpose: runs are expected to either finish or trap cleanly.
pub fn random_mem_program(rng: &mut ChaCha8Rng) -> Vec<Insn> {
    let mut insns: Vec<Insn> = Vec::new();
    push_lddw(&mut insns, 1, rng.random());
    // Half the time aim r2 somewhere near a real region so some accesses land.
    let base = match rng.random_range(0..4u8) {
        0 => 0,
        1 => fan_vm::STACK_BASE + rng.random_range(0..600),
        2 => fan_vm::INPUT_BASE + rng.random_range(0..64),
        _ => rng.random(),
    };
    push_lddw(&mut insns, 2, base);
    let body = rng.random_range(8..40usize);
    for _ in 0..body {
        match rng.random_range(0..10u8) {
            0..=4 => {
                let base = ALU_BINARY_BASES[rng.random_range(0..ALU_BINARY_BASES.len())];
                let mut imm: i32 = rng.random();
                if (base == 0x30 || base == 0x90) && imm == 0 {
                    imm = 1;
                }
                insns.push(Insn {
                    opcode: base | 0x07,
                    dst: rng.random_range(0..10u8),
                    src: 0,
                    off: 0,
                    imm,
                });
            }
            5..=8 => {
                let op = MEM_OPS[rng.random_range(0..MEM_OPS.len())];
                insns.push(Insn {
                    opcode: op,
                    dst: rng.random_range(0..11u8),
                    src: rng.random_range(0..11u8),
                    off: rng.random_range(-64..512i16),
                    imm: rng.random(),
                });
            }
            _ => {
                // Forward jump; target fixed up to stay in range once the
                // program length is known.
                insns.push(Insn {
                    opcode: insn::JGT_IMM,
                    dst: rng.random_range(0..10u8),
                    src: 0,
                    off: i16::MAX, // placeholder
                    imm: rng.random(),
                });
            }
        }
    }
    insns.push(Insn {
        opcode: insn::EXIT,
        dst: 0,
        src: 0,
        off: 0,
        imm: 0,
    });
    let last = insns.len() - 1;
    for pc in 0..insns.len() {
        if insns[pc].off == i16::MAX && insns[pc].opcode == insn::JGT_IMM {
            let max_fwd = (last - pc - 1) as i64;
            let hop = rng.random_range(0..=max_fwd.min(6)) as i16;
            insns[pc].off = hop;
        }
    }
    insns
}
