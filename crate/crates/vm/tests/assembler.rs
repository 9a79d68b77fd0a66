//! Assembler golden tests: concrete encodings, error reporting with line
//! numbers, and disassembler round-trips.

use fan_vm::program::ValidateError;
use fan_vm::{
    assemble, assemble_named, disassemble, encode_program, execute, AsmErrorKind, HostCallTable,
    SandboxMemory,
};

fn run(src: &str) -> u64 {
    let program = assemble(src).expect("source assembles");
    let mut mem = SandboxMemory::new(4096);
    let mut host = HostCallTable::new();
    execute(&program, &mut mem, &mut host, &[]).expect("program runs")
}

#[test]
fn minimal_program_assembles_to_two_slots_and_returns_42() {
    let program = assemble("mov64 r0, 42\nexit").unwrap();
    assert_eq!(program.insns.len(), 2);
    assert_eq!(program.symbol, "main");
    assert_eq!(run("mov64 r0, 42\nexit"), 42);
}

#[test]
fn add_golden() {
    assert_eq!(run("mov64 r0, 7\nadd64 r0, 5\nexit"), 12);
}

#[test]
fn mov64_encoding_golden() {
    let program = assemble("mov64 r1, 1\nexit").unwrap();
    let bytes = encode_program(&program.insns);
    assert_eq!(
        &bytes[..8],
        &[0xb7, 0x01, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00]
    );
}

#[test]
fn register_out_of_range_is_reported_with_line() {
    let e = assemble("mov64 r11, 0\nexit").unwrap_err();
    assert_eq!(e.line, 1);
    assert_eq!(e.kind, AsmErrorKind::RegisterOutOfRange);

    let e = assemble("mov64 r0, 0\nadd64 r12, r0\nexit").unwrap_err();
    assert_eq!(e.line, 2);
    assert_eq!(e.kind, AsmErrorKind::RegisterOutOfRange);
}

#[test]
fn labels_resolve_backwards_and_forwards() {
    let src = "\
mov64 r2, 3
loop:
lsh64 r2, 1
jlt r2, 100, loop
mov64 r0, r2
exit";
    assert_eq!(run(src), 192);

    let fwd = "\
mov64 r0, 1
ja done
mov64 r0, 99
done:
exit";
    assert_eq!(run(fwd), 1);
}

#[test]
fn memory_operands_round_trip_through_the_stack() {
    let src = "\
lddw r1, 0x1122334455667788
stxdw [r10-8], r1
ldxw r0, [r10-8]    ; low word only
exit";
    assert_eq!(run(src), 0x55667788);
}

#[test]
fn hex_decimal_and_negative_immediates_parse() {
    assert_eq!(run("mov64 r0, 0x10\nadd64 r0, -6\nexit"), 10);
    assert_eq!(run("lddw r0, 0xffffffffffffffff\nexit"), u64::MAX);
    assert_eq!(run("lddw r0, -1\nexit"), u64::MAX);
}

#[test]
fn error_goldens() {
    let e = assemble("frobnicate r0, 1\nexit").unwrap_err();
    assert_eq!(e.kind, AsmErrorKind::UnknownMnemonic("frobnicate".into()));

    let e = assemble("jeq r0, 0, nowhere\nexit").unwrap_err();
    assert_eq!(e.kind, AsmErrorKind::UnknownLabel("nowhere".into()));

    let e = assemble("x:\nmov64 r0, 0\nx:\nexit").unwrap_err();
    assert_eq!(e.kind, AsmErrorKind::DuplicateLabel("x".into()));

    let e = assemble("mov64 r0, 0x100000000\nexit").unwrap_err();
    assert_eq!(e.kind, AsmErrorKind::ImmediateOutOfRange);

    let e = assemble("mov64 r0, 1").unwrap_err();
    assert_eq!(e.kind, AsmErrorKind::Invalid(ValidateError::MissingExit));

    let e = assemble("div64 r0, 0\nexit").unwrap_err();
    assert_eq!(
        e.kind,
        AsmErrorKind::Invalid(ValidateError::ZeroImmediateDivisor { pc: 0 })
    );
    assert_eq!(e.line, 1);

    let e = assemble("mov64 r0, [r1+8]\nexit").unwrap_err();
    assert!(matches!(e.kind, AsmErrorKind::WrongOperands { .. }));
}

#[test]
fn named_entry_symbol_is_kept() {
    let p = assemble_named("mov64 r0, 0\nexit", "on_cell").unwrap();
    assert_eq!(p.symbol, "on_cell");
}

#[test]
fn disassembly_reassembles_to_identical_instructions() {
    let src = "\
lddw r6, 0xfeedface12345678
mov64 r1, 10
mov32 r2, -3
neg64 r1
neg32 r2
add64 r1, r2
sub64 r1, 7
mul32 r2, r2
div64 r1, 3
mod64 r1, 5
or64 r1, 0xf
and64 r1, r6
xor32 r2, 0x55
lsh64 r1, 2
rsh64 r1, 1
arsh64 r1, 1
arsh32 r2, 3
stxdw [r10-8], r1
stxw [r10-12], r2
stb [r10-13], 7
sth [r10-16], -2
stw [r10-20], 1000
stdw [r10-32], 123456
ldxb r3, [r10-13]
ldxh r4, [r10-16]
ldxw r5, [r10-20]
ldxdw r0, [r10-32]
jeq r0, 123456, next
mov64 r0, 0
next:
jne r3, r4, skip
jgt r0, r1, skip
jge r0, 0, skip
jset r0, 1, skip
jsgt r0, -1, skip
jsge r0, r2, skip
jlt r1, r0, skip
jle r1, r0, skip
jslt r2, 0, skip
jsle r2, r0, skip
skip:
ja end
mov64 r0, 0
end:
call 3
exit";
    let first = assemble(src).unwrap();
    let text = disassemble(&first);
    let second = assemble(&text).unwrap_or_else(|e| panic!("disassembly rejected: {e}\n{text}"));
    assert_eq!(first.insns, second.insns);
}
