//! Instruction representation and the fixed 8-byte wire encoding.
//!
//! Every instruction occupies one 64-bit slot: opcode (8 bits), destination
//! and source register packed in one byte (dst low nibble, src high nibble),
//! a signed 16-bit offset and a signed 32-bit immediate, all little-endian.
//! `lddw` is the single exception: it spans two slots, the second carrying
//! the upper 32 immediate bits in an otherwise zeroed slot.

use thiserror::Error;

pub const INSN_SIZE: usize = 8;

// Operand source flag shared by ALU and jump classes.
pub const BPF_K: u8 = 0x00;
pub const BPF_X: u8 = 0x08;

// 64-bit immediate load, two slots.
pub const LDDW: u8 = 0x18;

// Register loads.
pub const LDXW: u8 = 0x61;
pub const LDXH: u8 = 0x69;
pub const LDXB: u8 = 0x71;
pub const LDXDW: u8 = 0x79;

// Stores from immediate.
pub const STW: u8 = 0x62;
pub const STH: u8 = 0x6a;
pub const STB: u8 = 0x72;
pub const STDW: u8 = 0x7a;

// Stores from register.
pub const STXW: u8 = 0x63;
pub const STXH: u8 = 0x6b;
pub const STXB: u8 = 0x73;
pub const STXDW: u8 = 0x7b;

// 32-bit ALU, immediate and register forms.
pub const ADD32_IMM: u8 = 0x04;
pub const ADD32_REG: u8 = 0x0c;
pub const SUB32_IMM: u8 = 0x14;
pub const SUB32_REG: u8 = 0x1c;
pub const MUL32_IMM: u8 = 0x24;
pub const MUL32_REG: u8 = 0x2c;
pub const DIV32_IMM: u8 = 0x34;
pub const DIV32_REG: u8 = 0x3c;
pub const OR32_IMM: u8 = 0x44;
pub const OR32_REG: u8 = 0x4c;
pub const AND32_IMM: u8 = 0x54;
pub const AND32_REG: u8 = 0x5c;
pub const LSH32_IMM: u8 = 0x64;
pub const LSH32_REG: u8 = 0x6c;
pub const RSH32_IMM: u8 = 0x74;
pub const RSH32_REG: u8 = 0x7c;
pub const NEG32: u8 = 0x84;
pub const MOD32_IMM: u8 = 0x94;
pub const MOD32_REG: u8 = 0x9c;
pub const XOR32_IMM: u8 = 0xa4;
pub const XOR32_REG: u8 = 0xac;
pub const MOV32_IMM: u8 = 0xb4;
pub const MOV32_REG: u8 = 0xbc;
pub const ARSH32_IMM: u8 = 0xc4;
pub const ARSH32_REG: u8 = 0xcc;

// 64-bit ALU, immediate and register forms.
pub const ADD64_IMM: u8 = 0x07;
pub const ADD64_REG: u8 = 0x0f;
pub const SUB64_IMM: u8 = 0x17;
pub const SUB64_REG: u8 = 0x1f;
pub const MUL64_IMM: u8 = 0x27;
pub const MUL64_REG: u8 = 0x2f;
pub const DIV64_IMM: u8 = 0x37;
pub const DIV64_REG: u8 = 0x3f;
pub const OR64_IMM: u8 = 0x47;
pub const OR64_REG: u8 = 0x4f;
pub const AND64_IMM: u8 = 0x57;
pub const AND64_REG: u8 = 0x5f;
pub const LSH64_IMM: u8 = 0x67;
pub const LSH64_REG: u8 = 0x6f;
pub const RSH64_IMM: u8 = 0x77;
pub const RSH64_REG: u8 = 0x7f;
pub const NEG64: u8 = 0x87;
pub const MOD64_IMM: u8 = 0x97;
pub const MOD64_REG: u8 = 0x9f;
pub const XOR64_IMM: u8 = 0xa7;
pub const XOR64_REG: u8 = 0xaf;
pub const MOV64_IMM: u8 = 0xb7;
pub const MOV64_REG: u8 = 0xbf;
pub const ARSH64_IMM: u8 = 0xc7;
pub const ARSH64_REG: u8 = 0xcf;

// Jumps. Comparisons are over full 64-bit register width.
pub const JA: u8 = 0x05;
pub const JEQ_IMM: u8 = 0x15;
pub const JEQ_REG: u8 = 0x1d;
pub const JGT_IMM: u8 = 0x25;
pub const JGT_REG: u8 = 0x2d;
pub const JGE_IMM: u8 = 0x35;
pub const JGE_REG: u8 = 0x3d;
pub const JSET_IMM: u8 = 0x45;
pub const JSET_REG: u8 = 0x4d;
pub const JNE_IMM: u8 = 0x55;
pub const JNE_REG: u8 = 0x5d;
pub const JSGT_IMM: u8 = 0x65;
pub const JSGT_REG: u8 = 0x6d;
pub const JSGE_IMM: u8 = 0x75;
pub const JSGE_REG: u8 = 0x7d;
pub const CALL: u8 = 0x85;
pub const EXIT: u8 = 0x95;
pub const JLT_IMM: u8 = 0xa5;
pub const JLT_REG: u8 = 0xad;
pub const JLE_IMM: u8 = 0xb5;
pub const JLE_REG: u8 = 0xbd;
pub const JSLT_IMM: u8 = 0xc5;
pub const JSLT_REG: u8 = 0xcd;
pub const JSLE_IMM: u8 = 0xd5;
pub const JSLE_REG: u8 = 0xdd;

/// One decoded instruction slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Insn {
    pub opcode: u8,
    pub dst: u8,
    pub src: u8,
    pub off: i16,
    pub imm: i32,
}

impl Insn {
    pub fn encode(&self) -> [u8; INSN_SIZE] {
        let mut b = [0u8; INSN_SIZE];
        b[0] = self.opcode;
        b[1] = (self.src << 4) | (self.dst & 0x0f);
        b[2..4].copy_from_slice(&self.off.to_le_bytes());
        b[4..8].copy_from_slice(&self.imm.to_le_bytes());
        b
    }

    fn decode_raw(b: &[u8]) -> Insn {
        Insn {
            opcode: b[0],
            dst: b[1] & 0x0f,
            src: (b[1] & 0xf0) >> 4,
            off: i16::from_le_bytes([b[2], b[3]]),
            imm: i32::from_le_bytes([b[4], b[5], b[6], b[7]]),
        }
    }
}

pub(crate) fn is_known_opcode(op: u8) -> bool {
    match op {
        LDDW | LDXB | LDXH | LDXW | LDXDW => true,
        STB | STH | STW | STDW | STXB | STXH | STXW | STXDW => true,
        JA | CALL | EXIT => true,
        _ => match op & 0x07 {
            // ALU32 / ALU64: thirteen operation bases; neg has no register form.
            0x04 | 0x07 => {
                let base = op & 0xf0;
                base <= 0xc0 && !(base == 0x80 && op & 0x08 != 0)
            }
            // Conditional jumps; 0x80/0x90 bases are call/exit, caught above.
            0x05 => matches!(
                op & 0xf0,
                0x10 | 0x20 | 0x30 | 0x40 | 0x50 | 0x60 | 0x70 | 0xa0 | 0xb0 | 0xc0 | 0xd0
            ),
            _ => false,
        },
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("bytecode length {0} is not a multiple of {INSN_SIZE}")]
    Truncated(usize),
    #[error("unknown opcode {opcode:#04x} at instruction {pc}")]
    UnknownOpcode { pc: usize, opcode: u8 },
    #[error("lddw at instruction {pc} is missing its second slot")]
    DanglingWideImmediate { pc: usize },
    #[error("malformed lddw continuation at instruction {pc}")]
    BadWideImmediate { pc: usize },
}

/// Serializes a program to the 8-byte-per-slot wire format.
pub fn encode_program(insns: &[Insn]) -> Vec<u8> {
    let mut out = Vec::with_capacity(insns.len() * INSN_SIZE);
    for i in insns {
        out.extend_from_slice(&i.encode());
    }
    out
}

/// Decodes a byte stream into instruction slots, rejecting unknown opcodes
/// and ill-formed `lddw` pairs. The inverse of [`encode_program`] on every
/// well-formed program.
pub fn decode_program(bytes: &[u8]) -> Result<Vec<Insn>, DecodeError> {
    if bytes.len() % INSN_SIZE != 0 {
        return Err(DecodeError::Truncated(bytes.len()));
    }
    let n = bytes.len() / INSN_SIZE;
    let mut insns = Vec::with_capacity(n);
    let mut pc = 0usize;
    while pc < n {
        let insn = Insn::decode_raw(&bytes[pc * INSN_SIZE..]);
        if !is_known_opcode(insn.opcode) {
            return Err(DecodeError::UnknownOpcode {
                pc,
                opcode: insn.opcode,
            });
        }
        insns.push(insn);
        if insn.opcode == LDDW {
            if pc + 1 >= n {
                return Err(DecodeError::DanglingWideImmediate { pc });
            }
            let cont = Insn::decode_raw(&bytes[(pc + 1) * INSN_SIZE..]);
            if cont.opcode != 0 || cont.dst != 0 || cont.src != 0 || cont.off != 0 {
                return Err(DecodeError::BadWideImmediate { pc: pc + 1 });
            }
            insns.push(cont);
            pc += 2;
        } else {
            pc += 1;
        }
    }
    Ok(insns)
}
