//! Interpreter semantics beyond pure ALU: budgets, host calls, the three
//! memory regions, and cross-thread execution.

use fan_vm::{
    assemble, execute, execute_with_budget, HostCallError, HostCallTable, SandboxMemory, Trap,
    INPUT_BASE,
};

fn run_with(
    src: &str,
    mem: &mut SandboxMemory,
    host: &mut HostCallTable,
    input: &[u8],
) -> Result<u64, Trap> {
    let program = assemble(src).expect("test source assembles");
    execute(&program, mem, host, input)
}

fn run(src: &str) -> Result<u64, Trap> {
    let mut mem = SandboxMemory::new(4096);
    let mut host = HostCallTable::new();
    run_with(src, &mut mem, &mut host, &[])
}

#[test]
fn infinite_loop_hits_the_instruction_budget() {
    let program = assemble("ja -1").unwrap();
    let mut mem = SandboxMemory::new(0);
    let mut host = HostCallTable::new();
    let got = execute_with_budget(&program, &mut mem, &mut host, &[], 5_000);
    assert_eq!(got, Err(Trap::BudgetExceeded { budget: 5_000 }));
}

#[test]
fn host_calls_receive_r1_to_r5_and_return_through_r0() {
    let mut mem = SandboxMemory::new(0);
    let mut host = HostCallTable::new();
    host.register(7, |_, args| {
        Ok(args[0] * 10_000 + args[1] * 1_000 + args[2] * 100 + args[3] * 10 + args[4])
    });
    let src = "\
mov64 r1, 1
mov64 r2, 2
mov64 r3, 3
mov64 r4, 4
mov64 r5, 5
call 7
exit";
    assert_eq!(run_with(src, &mut mem, &mut host, &[]), Ok(12_345));
}

#[test]
fn unknown_host_call_traps() {
    assert_eq!(
        run("call 99\nexit"),
        Err(Trap::UnknownHostCall { pc: 0, call: 99 })
    );
}

#[test]
fn failing_host_call_surfaces_as_a_trap() {
    let mut mem = SandboxMemory::new(0);
    let mut host = HostCallTable::new();
    host.register(8, |_, _| Err(HostCallError::Rejected("not now".into())));
    let got = run_with("call 8\nexit", &mut mem, &mut host, &[]);
    assert_eq!(
        got,
        Err(Trap::HostCall {
            pc: 0,
            call: 8,
            source: HostCallError::Rejected("not now".into()),
        })
    );
}

#[test]
fn alloc_host_call_hands_out_usable_heap() {
    let mut mem = SandboxMemory::new(64);
    let mut host = HostCallTable::new();
    host.register_alloc();
    let src = "\
mov64 r1, 16
call 3
mov64 r6, r0        ; first allocation starts the heap
mov64 r1, 8
call 3
mov64 r7, r0        ; second allocation comes after the first
stxdw [r6+8], r7
ldxdw r0, [r6+8]
exit";
    assert_eq!(run_with(src, &mut mem, &mut host, &[]), Ok(16));
    assert_eq!(mem.allocated(), 24);
}

#[test]
fn exhausted_allocator_returns_null_to_the_guest() {
    let mut mem = SandboxMemory::new(16);
    let mut host = HostCallTable::new();
    host.register_alloc();
    let src = "\
mov64 r1, 32
call 3
exit";
    assert_eq!(run_with(src, &mut mem, &mut host, &[]), Ok(0));
    assert_eq!(mem.allocated(), 0);
}

#[test]
fn stack_is_addressable_only_within_its_512_bytes() {
    assert_eq!(
        run("mov64 r1, 7\nstxdw [r10-512], r1\nldxdw r0, [r10-512]\nexit"),
        Ok(7)
    );
    assert!(matches!(
        run("stdw [r10-520], 1\nexit"),
        Err(Trap::SandboxFault { write: true, .. })
    ));
    // r10 points one past the top; an 8-byte store there overruns.
    assert!(matches!(
        run("stdw [r10], 1\nexit"),
        Err(Trap::SandboxFault { write: true, .. })
    ));
}

#[test]
fn stack_is_zeroed_between_invocations() {
    let mut mem = SandboxMemory::new(0);
    let mut host = HostCallTable::new();
    let dirty = "mov64 r1, -1\nstxdw [r10-8], r1\nmov64 r0, 0\nexit";
    assert_eq!(run_with(dirty, &mut mem, &mut host, &[]), Ok(0));
    let probe = "ldxdw r0, [r10-8]\nexit";
    assert_eq!(run_with(probe, &mut mem, &mut host, &[]), Ok(0));
}

#[test]
fn input_record_is_visible_and_read_only() {
    let input = [10u8, 20, 30, 40, 50];
    let mut mem = SandboxMemory::new(0);
    let mut host = HostCallTable::new();

    // r1 = base, r2 = length on entry.
    assert_eq!(run_with("mov64 r0, r2\nexit", &mut mem, &mut host, &input), Ok(5));
    assert_eq!(
        run_with("ldxb r0, [r1+2]\nexit", &mut mem, &mut host, &input),
        Ok(30)
    );
    let got = run_with("stb [r1], 0\nexit", &mut mem, &mut host, &input);
    assert!(matches!(got, Err(Trap::SandboxFault { write: true, .. })));
    // Reads past the record end fault rather than reading a neighbor's data.
    let got = run_with("ldxh r0, [r1+4]\nexit", &mut mem, &mut host, &input);
    assert!(matches!(got, Err(Trap::SandboxFault { write: false, .. })));
}

#[test]
fn without_input_the_window_does_not_exist() {
    let mut mem = SandboxMemory::new(0);
    let mut host = HostCallTable::new();
    let program = assemble("ldxb r0, [r1]\nexit").unwrap();
    // r1 is zero here, and with a zero-byte heap nothing is mapped at all.
    assert!(matches!(
        execute(&program, &mut mem, &mut host, &[]),
        Err(Trap::SandboxFault { vaddr: 0, .. })
    ));

    let probe = assemble("lddw r1, 0x300000000\nldxb r0, [r1]\nexit").unwrap();
    let got = execute(&probe, &mut mem, &mut host, &[]);
    assert!(matches!(
        got,
        Err(Trap::SandboxFault { vaddr: INPUT_BASE, .. })
    ));
}

#[test]
fn programs_move_between_threads() {
    let program = assemble("mov64 r0, 11\nmul64 r0, r0\nexit").unwrap();
    let handle = std::thread::spawn(move || {
        let mut mem = SandboxMemory::new(0);
        let mut host = HostCallTable::new();
        execute(&program, &mut mem, &mut host, &[])
    });
    assert_eq!(handle.join().unwrap(), Ok(121));
}

#[test]
fn host_closures_can_capture_embedder_state() {
    let mut log: Vec<u64> = Vec::new();
    let mut mem = SandboxMemory::new(0);
    {
        let mut host = HostCallTable::new();
        host.register(4, |_, args| {
            log.push(args[0]);
            Ok(0)
        });
        let src = "\
mov64 r1, 31
call 4
mov64 r1, 41
call 4
exit";
        let program = assemble(src).unwrap();
        execute(&program, &mut mem, &mut host, &[]).unwrap();
    }
    assert_eq!(log, vec![31, 41]);
}

#[test]
fn jump_comparisons_distinguish_signed_and_unsigned() {
    // -1 unsigned is the largest value, signed it is below zero.
    let src = "\
mov64 r1, -1
mov64 r2, 1
mov64 r0, 0
jgt r1, r2, unsigned_big
ja out
unsigned_big:
add64 r0, 1
jslt r1, r2, signed_small
ja out
signed_small:
add64 r0, 2
out:
exit";
    assert_eq!(run(src), Ok(3));
}
