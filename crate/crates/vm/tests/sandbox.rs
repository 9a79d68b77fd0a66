//! Sandbox containment: allocator discipline, bounds checking, and a fuzz
//! run of randomized memory-heavy programs that must never corrupt host
//! memory around the guest heap.

mod support;

use fan_vm::{execute, AllocError, HostCallTable, Program, SandboxMemory, Trap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn alloc_is_aligned_zeroed_and_bump_only() {
    let mut mem = SandboxMemory::new(256);
    let a = mem.alloc(5).unwrap();
    let b = mem.alloc(16).unwrap();
    let c = mem.alloc(1).unwrap();
    assert_eq!(a, 0);
    assert_eq!(b, 8); // 5 rounds up to the 8-byte grain
    assert_eq!(c, 24);
    assert_eq!(mem.allocated(), 32);
    assert!(mem.read(a, 32).unwrap().iter().all(|&x| x == 0));

    let err = mem.alloc(512).unwrap_err();
    assert_eq!(
        err,
        AllocError::OutOfSandboxMemory {
            requested: 512,
            remaining: 224,
        }
    );
    // A failed allocation must not move the brk.
    assert_eq!(mem.allocated(), 32);
}

#[test]
fn reads_and_writes_respect_the_heap_limit() {
    let mut mem = SandboxMemory::new(64);
    mem.write(0, &[1, 2, 3, 4]).unwrap();
    assert_eq!(mem.read(0, 4).unwrap(), &[1, 2, 3, 4]);
    mem.write(63, &[9]).unwrap();

    assert!(mem.write(61, &[0; 4]).is_err());
    assert!(mem.read(64, 1).is_err());
    assert!(mem.read(u64::MAX, 2).is_err()); // offset arithmetic must not wrap
    assert!(mem.read(0, u64::MAX).is_err());
    assert!(mem.canaries_intact());
}

#[test]
fn guest_stores_at_the_heap_edges_leave_canaries_intact() {
    let src = "\
mov64 r1, 0
stdw [r1], -1          ; first 8 bytes of the heap
mov64 r1, 120
stdw [r1], -1          ; last 8 bytes of a 128-byte heap
mov64 r0, 0
exit";
    let program = fan_vm::assemble(src).unwrap();
    let mut mem = SandboxMemory::new(128);
    let mut host = HostCallTable::new();
    execute(&program, &mut mem, &mut host, &[]).unwrap();
    assert_eq!(mem.read(120, 8).unwrap(), &[0xff; 8]);
    assert!(mem.canaries_intact());

    // One byte past the heap end must trap, not dent the canary.
    let over = fan_vm::assemble("mov64 r1, 121\nstdw [r1], -1\nexit").unwrap();
    let got = execute(&over, &mut mem, &mut host, &[]);
    assert!(matches!(got, Err(Trap::SandboxFault { write: true, .. })));
    assert!(mem.canaries_intact());
}

#[test]
fn fuzz_random_memory_programs_stay_contained() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfa2_2e11);
    let input: Vec<u8> = (0..48u8).collect();
    let mut finished = 0usize;
    let mut trapped = 0usize;
    for case in 0..2_000 {
        let insns = support::random_mem_program(&mut rng);
        let program = Program::new(insns, "fuzz").expect("generator emits valid programs");
        let mut mem = SandboxMemory::new(4096);
        let mut host = HostCallTable::new();
        match execute(&program, &mut mem, &mut host, &input) {
            Ok(_) => finished += 1,
            Err(Trap::SandboxFault { .. }) | Err(Trap::DivisionByZero { .. }) => trapped += 1,
            Err(other) => panic!("case {case}: unexpected trap {other:?}"),
        }
        assert!(mem.canaries_intact(), "case {case} corrupted a canary");
    }
    // The corpus must exercise both clean exits and contained faults.
    assert!(finished > 0, "no program ran to completion");
    assert!(trapped > 0, "no program faulted");
}
