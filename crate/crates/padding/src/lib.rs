//! Circuit padding state machines.
//!
//! A machine is a small table of states and event-driven edges
//! ([`MachineSpec`]); a per-circuit [`MachineInstance`] walks it, asking the
//! host to arm or cancel one-shot padding timers. The host owns time and
//! randomness: machines are pure reactors, which keeps them deterministic
//! under a seeded RNG and trivially embeddable in a simulator or a relay.

pub mod builtin;
pub mod dist;
pub mod event;
pub mod machine;
pub mod spec;

pub use builtin::{dropmark_defense_machine, setup_machine};
pub use dist::Dist;
pub use event::MachineEvent;
pub use machine::{Action, MachineInstance};
pub use spec::{MachineSpec, SpecError, State, StateId};
