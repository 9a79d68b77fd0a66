//! Textual assembler and matching disassembler.
//!
//! One instruction per line; `;` starts a comment; `name:` defines a label.
//! Operands are registers (`r0`..`r10`), decimal or `0x` hex immediates,
//! memory references (`[r1+8]`, `[r10-16]`) and jump targets (a label or a
//! signed slot offset such as `+3`).
//!
//! ```text
//! ; double r2 until it exceeds 100
//! mov64 r2, 3
//! loop:
//! lsh64 r2, 1
//! jlt r2, 100, loop
//! mov64 r0, r2
//! exit
//! ```

use crate::insn::{self, Insn};
use crate::program::{validate, Program, ValidateError};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AsmErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("expected operands: {expected}")]
    WrongOperands { expected: &'static str },
    #[error("register out of range (r0..r10)")]
    RegisterOutOfRange,
    #[error("cannot parse operand `{0}`")]
    BadOperand(String),
    #[error("immediate does not fit in 32 bits (use lddw for wide constants)")]
    ImmediateOutOfRange,
    #[error("memory offset does not fit in 16 bits")]
    OffsetOutOfRange,
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("jump distance does not fit in 16 bits")]
    JumpTooFar,
    #[error("invalid program: {0}")]
    Invalid(ValidateError),
}

fn err(line: usize, kind: AsmErrorKind) -> AsmError {
    AsmError { line, kind }
}

#[derive(Debug, Clone)]
enum Operand {
    Reg(u8),
    Imm(i128),
    Mem { base: u8, off: i16 },
    Label(String),
}

struct Line<'a> {
    no: usize,
    mnemonic: &'a str,
    operands: Vec<Operand>,
    slot: usize,
}

/// Assembles `source` into a validated program with entry symbol `main`.
pub fn assemble(source: &str) -> Result<Program, AsmError> {
    assemble_named(source, "main")
}

pub fn assemble_named(source: &str, symbol: &str) -> Result<Program, AsmError> {
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut lines: Vec<Line> = Vec::new();
    let mut slot = 0usize;

    for (idx, raw) in source.lines().enumerate() {
        let no = idx + 1;
        let mut text = raw.split(';').next().unwrap_or("").trim();
        // Labels may prefix an instruction or stand alone.
        while let Some(colon) = text.find(':') {
            let (name, rest) = text.split_at(colon);
            let name = name.trim();
            if name.is_empty() || !is_ident(name) {
                break;
            }
            if labels.insert(name.to_string(), slot).is_some() {
                return Err(err(no, AsmErrorKind::DuplicateLabel(name.to_string())));
            }
            text = rest[1..].trim();
        }
        if text.is_empty() {
            continue;
        }
        let (mnemonic, rest) = match text.find(char::is_whitespace) {
            Some(ws) => text.split_at(ws),
            None => (text, ""),
        };
        let operands = parse_operands(no, rest.trim())?;
        let width = if mnemonic == "lddw" { 2 } else { 1 };
        lines.push(Line {
            no,
            mnemonic,
            operands,
            slot,
        });
        slot += width;
    }

    let mut insns: Vec<Insn> = Vec::with_capacity(slot);
    let mut slot_line = vec![0usize; slot];
    for line in &lines {
        slot_line[line.slot] = line.no;
        encode_line(line, &labels, &mut insns)?;
    }

    let program = Program {
        insns,
        symbol: symbol.to_string(),
    };
    validate(&program).map_err(|e| {
        let line = match pc_of(&e) {
            Some(pc) if pc < slot_line.len() => slot_line[pc],
            _ => 0,
        };
        err(line, AsmErrorKind::Invalid(e))
    })?;
    Ok(program)
}

fn pc_of(e: &ValidateError) -> Option<usize> {
    match e {
        ValidateError::UnknownOpcode { pc, .. }
        | ValidateError::RegisterOutOfRange { pc }
        | ValidateError::JumpOutOfRange { pc }
        | ValidateError::JumpIntoWideImmediate { pc }
        | ValidateError::DanglingWideImmediate { pc }
        | ValidateError::ZeroImmediateDivisor { pc } => Some(*pc),
        ValidateError::EmptyProgram | ValidateError::MissingExit => None,
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_operands(no: usize, rest: &str) -> Result<Vec<Operand>, AsmError> {
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    rest.split(',')
        .map(|tok| parse_operand(no, tok.trim()))
        .collect()
}

fn parse_operand(no: usize, tok: &str) -> Result<Operand, AsmError> {
    if tok.is_empty() {
        return Err(err(no, AsmErrorKind::BadOperand(tok.to_string())));
    }
    if let Some(inner) = tok.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| err(no, AsmErrorKind::BadOperand(tok.to_string())))?
            .trim();
        let (reg_part, off) = match inner.find(['+', '-']) {
            Some(pos) => {
                let (r, o) = inner.split_at(pos);
                let off = parse_int(o.trim())
                    .ok_or_else(|| err(no, AsmErrorKind::BadOperand(tok.to_string())))?;
                (r.trim(), off)
            }
            None => (inner, 0),
        };
        let base = parse_reg(no, reg_part)?;
        let off = i16::try_from(off).map_err(|_| err(no, AsmErrorKind::OffsetOutOfRange))?;
        return Ok(Operand::Mem { base, off });
    }
    if tok.starts_with('r') && tok[1..].chars().all(|c| c.is_ascii_digit()) {
        return Ok(Operand::Reg(parse_reg(no, tok)?));
    }
    if let Some(v) = parse_int(tok) {
        return Ok(Operand::Imm(v));
    }
    if is_ident(tok) {
        return Ok(Operand::Label(tok.to_string()));
    }
    Err(err(no, AsmErrorKind::BadOperand(tok.to_string())))
}

fn parse_reg(no: usize, tok: &str) -> Result<u8, AsmError> {
    let digits = tok
        .strip_prefix('r')
        .filter(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
        .ok_or_else(|| err(no, AsmErrorKind::BadOperand(tok.to_string())))?;
    let v: u32 = digits
        .parse()
        .map_err(|_| err(no, AsmErrorKind::RegisterOutOfRange))?;
    if v > 10 {
        return Err(err(no, AsmErrorKind::RegisterOutOfRange));
    }
    Ok(v as u8)
}

fn parse_int(tok: &str) -> Option<i128> {
    let (neg, body) = match tok.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, tok.strip_prefix('+').unwrap_or(tok)),
    };
    let v = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i128::from_str_radix(hex, 16).ok()?
    } else {
        body.parse::<i128>().ok()?
    };
    Some(if neg { -v } else { v })
}

fn imm32(no: usize, v: i128) -> Result<i32, AsmError> {
    i32::try_from(v).map_err(|_| err(no, AsmErrorKind::ImmediateOutOfRange))
}

fn encode_line(
    line: &Line,
    labels: &HashMap<String, usize>,
    insns: &mut Vec<Insn>,
) -> Result<(), AsmError> {
    let no = line.no;
    let ops = &line.operands;
    let m = line.mnemonic;

    let push = |insns: &mut Vec<Insn>, opcode: u8, dst: u8, src: u8, off: i16, imm: i32| {
        insns.push(Insn {
            opcode,
            dst,
            src,
            off,
            imm,
        });
    };

    // ALU: <op>64 / <op>32 with (reg, reg|imm), neg unary.
    if let Some((base, wide)) = alu_mnemonic(m) {
        let class = if wide { 0x07 } else { 0x04 };
        if base == 0x80 {
            match ops.as_slice() {
                [Operand::Reg(d)] => {
                    push(insns, 0x80 | class, *d, 0, 0, 0);
                    return Ok(());
                }
                _ => return Err(err(no, AsmErrorKind::WrongOperands { expected: "reg" })),
            }
        }
        return match ops.as_slice() {
            [Operand::Reg(d), Operand::Reg(s)] => {
                push(insns, base | 0x08 | class, *d, *s, 0, 0);
                Ok(())
            }
            [Operand::Reg(d), Operand::Imm(v)] => {
                push(insns, base | class, *d, 0, 0, imm32(no, *v)?);
                Ok(())
            }
            _ => Err(err(
                no,
                AsmErrorKind::WrongOperands {
                    expected: "reg, reg|imm",
                },
            )),
        };
    }

    match m {
        "lddw" => match ops.as_slice() {
            [Operand::Reg(d), Operand::Imm(v)] => {
                if *v < -(1i128 << 63) || *v >= 1i128 << 64 {
                    return Err(err(no, AsmErrorKind::ImmediateOutOfRange));
                }
                let bits = *v as u64;
                push(insns, insn::LDDW, *d, 0, 0, bits as u32 as i32);
                push(insns, 0, 0, 0, 0, (bits >> 32) as u32 as i32);
                Ok(())
            }
            _ => Err(err(no, AsmErrorKind::WrongOperands { expected: "reg, imm" })),
        },
        "ldxb" | "ldxh" | "ldxw" | "ldxdw" => {
            let opcode = match m {
                "ldxb" => insn::LDXB,
                "ldxh" => insn::LDXH,
                "ldxw" => insn::LDXW,
                _ => insn::LDXDW,
            };
            match ops.as_slice() {
                [Operand::Reg(d), Operand::Mem { base, off }] => {
                    push(insns, opcode, *d, *base, *off, 0);
                    Ok(())
                }
                _ => Err(err(
                    no,
                    AsmErrorKind::WrongOperands {
                        expected: "reg, [reg+off]",
                    },
                )),
            }
        }
        "stb" | "sth" | "stw" | "stdw" => {
            let opcode = match m {
                "stb" => insn::STB,
                "sth" => insn::STH,
                "stw" => insn::STW,
                _ => insn::STDW,
            };
            match ops.as_slice() {
                [Operand::Mem { base, off }, Operand::Imm(v)] => {
                    push(insns, opcode, *base, 0, *off, imm32(no, *v)?);
                    Ok(())
                }
                _ => Err(err(
                    no,
                    AsmErrorKind::WrongOperands {
                        expected: "[reg+off], imm",
                    },
                )),
            }
        }
        "stxb" | "stxh" | "stxw" | "stxdw" => {
            let opcode = match m {
                "stxb" => insn::STXB,
                "stxh" => insn::STXH,
                "stxw" => insn::STXW,
                _ => insn::STXDW,
            };
            match ops.as_slice() {
                [Operand::Mem { base, off }, Operand::Reg(s)] => {
                    push(insns, opcode, *base, *s, *off, 0);
                    Ok(())
                }
                _ => Err(err(
                    no,
                    AsmErrorKind::WrongOperands {
                        expected: "[reg+off], reg",
                    },
                )),
            }
        }
        "ja" => match ops.as_slice() {
            [target] => {
                let off = resolve_target(no, target, line.slot, labels)?;
                push(insns, insn::JA, 0, 0, off, 0);
                Ok(())
            }
            _ => Err(err(no, AsmErrorKind::WrongOperands { expected: "target" })),
        },
        "call" => match ops.as_slice() {
            [Operand::Imm(v)] => {
                push(insns, insn::CALL, 0, 0, 0, imm32(no, *v)?);
                Ok(())
            }
            _ => Err(err(no, AsmErrorKind::WrongOperands { expected: "imm" })),
        },
        "exit" => {
            if !ops.is_empty() {
                return Err(err(no, AsmErrorKind::WrongOperands { expected: "none" }));
            }
            push(insns, insn::EXIT, 0, 0, 0, 0);
            Ok(())
        }
        _ => {
            if let Some(base) = jump_mnemonic(m) {
                return match ops.as_slice() {
                    [Operand::Reg(d), Operand::Reg(s), target] => {
                        let off = resolve_target(no, target, line.slot, labels)?;
                        push(insns, base | 0x08 | 0x05, *d, *s, off, 0);
                        Ok(())
                    }
                    [Operand::Reg(d), Operand::Imm(v), target] => {
                        let off = resolve_target(no, target, line.slot, labels)?;
                        push(insns, base | 0x05, *d, 0, off, imm32(no, *v)?);
                        Ok(())
                    }
                    _ => Err(err(
                        no,
                        AsmErrorKind::WrongOperands {
                            expected: "reg, reg|imm, target",
                        },
                    )),
                };
            }
            Err(err(no, AsmErrorKind::UnknownMnemonic(m.to_string())))
        }
    }
}

fn alu_mnemonic(m: &str) -> Option<(u8, bool)> {
    let (name, wide) = if let Some(n) = m.strip_suffix("64") {
        (n, true)
    } else if let Some(n) = m.strip_suffix("32") {
        (n, false)
    } else {
        return None;
    };
    let base = match name {
        "add" => 0x00,
        "sub" => 0x10,
        "mul" => 0x20,
        "div" => 0x30,
        "or" => 0x40,
        "and" => 0x50,
        "lsh" => 0x60,
        "rsh" => 0x70,
        "neg" => 0x80,
        "mod" => 0x90,
        "xor" => 0xa0,
        "mov" => 0xb0,
        "arsh" => 0xc0,
        _ => return None,
    };
    Some((base, wide))
}

fn jump_mnemonic(m: &str) -> Option<u8> {
    Some(match m {
        "jeq" => 0x10,
        "jgt" => 0x20,
        "jge" => 0x30,
        "jset" => 0x40,
        "jne" => 0x50,
        "jsgt" => 0x60,
        "jsge" => 0x70,
        "jlt" => 0xa0,
        "jle" => 0xb0,
        "jslt" => 0xc0,
        "jsle" => 0xd0,
        _ => return None,
    })
}

fn resolve_target(
    no: usize,
    target: &Operand,
    slot: usize,
    labels: &HashMap<String, usize>,
) -> Result<i16, AsmError> {
    let rel: i128 = match target {
        Operand::Imm(v) => *v,
        Operand::Label(name) => {
            let dest = *labels
                .get(name)
                .ok_or_else(|| err(no, AsmErrorKind::UnknownLabel(name.clone())))?;
            dest as i128 - slot as i128 - 1
        }
        _ => {
            return Err(err(
                no,
                AsmErrorKind::BadOperand("jump target must be a label or offset".into()),
            ))
        }
    };
    i16::try_from(rel).map_err(|_| err(no, AsmErrorKind::JumpTooFar))
}

/// Renders a program in assembler syntax; the output re-assembles to the
/// identical instruction sequence. Jump targets print as signed offsets.
pub fn disassemble(program: &Program) -> String {
    let mut out = String::new();
    let insns = &program.insns;
    let mut pc = 0usize;
    while pc < insns.len() {
        let i = insns[pc];
        if i.opcode == insn::LDDW && pc + 1 < insns.len() {
            let v = (i.imm as u32 as u64) | ((insns[pc + 1].imm as u32 as u64) << 32);
            let _ = writeln!(out, "lddw r{}, {:#x}", i.dst, v);
            pc += 2;
            continue;
        }
        let _ = writeln!(out, "{}", disasm_one(i));
        pc += 1;
    }
    out
}

fn disasm_one(i: Insn) -> String {
    let class = i.opcode & 0x07;
    let base = i.opcode & 0xf0;
    let reg_form = i.opcode & 0x08 != 0;
    match i.opcode {
        insn::LDXB | insn::LDXH | insn::LDXW | insn::LDXDW => {
            let m = match i.opcode {
                insn::LDXB => "ldxb",
                insn::LDXH => "ldxh",
                insn::LDXW => "ldxw",
                _ => "ldxdw",
            };
            format!("{m} r{}, [r{}{}]", i.dst, i.src, fmt_off(i.off))
        }
        insn::STB | insn::STH | insn::STW | insn::STDW => {
            let m = match i.opcode {
                insn::STB => "stb",
                insn::STH => "sth",
                insn::STW => "stw",
                _ => "stdw",
            };
            format!("{m} [r{}{}], {}", i.dst, fmt_off(i.off), i.imm)
        }
        insn::STXB | insn::STXH | insn::STXW | insn::STXDW => {
            let m = match i.opcode {
                insn::STXB => "stxb",
                insn::STXH => "stxh",
                insn::STXW => "stxw",
                _ => "stxdw",
            };
            format!("{m} [r{}{}], r{}", i.dst, fmt_off(i.off), i.src)
        }
        insn::JA => format!("ja {:+}", i.off),
        insn::CALL => format!("call {}", i.imm),
        insn::EXIT => "exit".to_string(),
        _ if class == 0x04 || class == 0x07 => {
            let suffix = if class == 0x07 { "64" } else { "32" };
            let name = match base {
                0x00 => "add",
                0x10 => "sub",
                0x20 => "mul",
                0x30 => "div",
                0x40 => "or",
                0x50 => "and",
                0x60 => "lsh",
                0x70 => "rsh",
                0x80 => "neg",
                0x90 => "mod",
                0xa0 => "xor",
                0xb0 => "mov",
                _ => "arsh",
            };
            if base == 0x80 {
                format!("{name}{suffix} r{}", i.dst)
            } else if reg_form {
                format!("{name}{suffix} r{}, r{}", i.dst, i.src)
            } else {
                format!("{name}{suffix} r{}, {}", i.dst, i.imm)
            }
        }
        _ => {
            let name = match base {
                0x10 => "jeq",
                0x20 => "jgt",
                0x30 => "jge",
                0x40 => "jset",
                0x50 => "jne",
                0x60 => "jsgt",
                0x70 => "jsge",
                0xa0 => "jlt",
                0xb0 => "jle",
                0xc0 => "jslt",
                _ => "jsle",
            };
            if reg_form {
                format!("{name} r{}, r{}, {:+}", i.dst, i.src, i.off)
            } else {
                format!("{name} r{}, {}, {:+}", i.dst, i.imm, i.off)
            }
        }
    }
}

fn fmt_off(off: i16) -> String {
    if off == 0 {
        String::new()
    } else {
        format!("{off:+}")
    }
}
