//! The two shipped machines: a one-shot setup acknowledgement machine and
//! the burst/gap cover-traffic machine that hides a circuit's true
//! activation point from a watching guard.

use crate::dist::Dist;
use crate::event::MachineEvent::*;
use crate::spec::{MachineSpec, State};

/// Cells per burst.
pub const BURST_LENGTH: Dist = Dist::Uniform { lo: 3, hi: 9 };
/// Spacing between cells inside a burst.
pub const BURST_SPACING_US: Dist = Dist::Fixed(0);
/// Pause between bursts.
pub const GAP_DELAY_US: Dist = Dist::Uniform {
    lo: 1_000,
    hi: 80_000,
};
/// Delay before the setup machine's single acknowledgement cell.
pub const SETUP_DELAY_US: Dist = Dist::Uniform { lo: 0, hi: 1_000 };

/// Burst/gap cover machine.
///
/// `start` waits for an `Activate` signal, then `burst` emits a handful of
/// back-to-back padding cells and `gap` pauses before the next burst.
/// `BeSilent` parks the machine in `silence` (cancelling any armed timer)
/// until the next `Activate`; `CircuitClose` retires it from any live state.
pub fn dropmark_defense_machine() -> MachineSpec {
    dropmark_defense_machine_with(BURST_LENGTH, BURST_SPACING_US, GAP_DELAY_US)
}

pub fn dropmark_defense_machine_with(
    burst_length: Dist,
    burst_spacing: Dist,
    gap_delay: Dist,
) -> MachineSpec {
    const START: usize = 0;
    const BURST: usize = 1;
    const GAP: usize = 2;
    const SILENCE: usize = 3;
    const END: usize = 4;
    let spec = MachineSpec {
        name: "dropmark-def".to_string(),
        states: vec![
            State::quiet("start").on(Activate, BURST),
            State::emitting("burst", burst_length, burst_spacing)
                .on(StateLengthZero, GAP)
                .on(BeSilent, SILENCE)
                .on(CircuitClose, END),
            State::emitting("gap", Dist::Fixed(1), gap_delay)
                .on(PaddingSent, BURST)
                .on(BeSilent, SILENCE)
                .on(CircuitClose, END),
            State::quiet("silence")
                .on(Activate, BURST)
                .on(CircuitClose, END),
            State::quiet("end"),
        ],
        start: START,
    };
    debug_assert!(spec.validate().is_ok());
    spec
}

/// One-shot machine that answers the first relayed cell on a fresh circuit
/// with a single padding cell after a small random delay, masking whether
/// the circuit opened for immediate use.
pub fn setup_machine() -> MachineSpec {
    const START: usize = 0;
    const SETUP: usize = 1;
    const END: usize = 2;
    let spec = MachineSpec {
        name: "circ-setup".to_string(),
        states: vec![
            State::quiet("start").on(NonPaddingSent, SETUP),
            State::emitting("setup", Dist::Fixed(1), SETUP_DELAY_US)
                .on(PaddingSent, END)
                .on(StateLengthZero, END),
            State::quiet("end"),
        ],
        start: START,
    };
    debug_assert!(spec.validate().is_ok());
    spec
}
