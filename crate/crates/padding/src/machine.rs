use crate::event::MachineEvent;
use crate::spec::{MachineSpec, StateId};
use rand::RngExt;
use std::sync::Arc;

/// Side effects a machine asks its host to perform. `SchedulePadding` arms a
/// one-shot padding timer; `CancelScheduled` disarms whatever is pending for
/// this machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    SchedulePadding { delay_us: u64 },
    CancelScheduled,
}

/// A running instance of a [`MachineSpec`], one per circuit.
///
/// The instance holds the current state, the remaining padding budget and
/// whether a padding timer is armed. Undefined (state, event) pairs are
/// no-ops by design: machines only ever move along declared edges.
#[derive(Debug, Clone)]
pub struct MachineInstance {
    spec: Arc<MachineSpec>,
    state: StateId,
    remaining: u64,
    pending: bool,
}

impl MachineInstance {
    pub fn new(spec: Arc<MachineSpec>) -> Self {
        let state = spec.start;
        MachineInstance {
            spec,
            state,
            remaining: 0,
            pending: false,
        }
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn state(&self) -> StateId {
        self.state
    }

    pub fn state_name(&self) -> &str {
        &self.spec.states[self.state].name
    }

    /// Padding cells this state still intends to emit.
    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn on_event<R: RngExt + ?Sized>(&mut self, ev: MachineEvent, rng: &mut R) -> Vec<Action> {
        let mut actions = Vec::new();
        if ev == MachineEvent::PaddingSent && self.pending {
            // The armed timer is what produced this cell.
            self.pending = false;
        }
        if let Some(next) = self.spec.states[self.state].target(ev) {
            self.enter(next, rng, &mut actions);
        } else if ev == MachineEvent::PaddingSent && self.remaining > 0 {
            self.remaining -= 1;
            if self.remaining == 0 {
                if let Some(next) = self.spec.states[self.state].target(MachineEvent::StateLengthZero)
                {
                    self.enter(next, rng, &mut actions);
                }
            } else {
                self.arm(rng, &mut actions);
            }
        }
        actions
    }

    fn enter<R: RngExt + ?Sized>(&mut self, next: StateId, rng: &mut R, actions: &mut Vec<Action>) {
        // Bounded by the state count: a chain of zero-length states cannot
        // cycle forever, it stalls instead.
        let mut hops = self.spec.states.len() + 1;
        let mut next = next;
        loop {
            if self.pending {
                actions.push(Action::CancelScheduled);
                self.pending = false;
            }
            self.state = next;
            self.remaining = 0;
            let st = &self.spec.states[next];
            let Some(length) = st.length else {
                return;
            };
            self.remaining = length.sample(rng);
            if self.remaining > 0 {
                self.arm(rng, actions);
                return;
            }
            hops -= 1;
            if hops == 0 {
                return;
            }
            match st.target(MachineEvent::StateLengthZero) {
                Some(n) => next = n,
                None => return,
            }
        }
    }

    fn arm<R: RngExt + ?Sized>(&mut self, rng: &mut R, actions: &mut Vec<Action>) {
        let iat = self.spec.states[self.state]
            .iat
            .expect("emitting states always carry an iat distribution");
        actions.push(Action::SchedulePadding {
            delay_us: iat.sample(rng),
        });
        self.pending = true;
    }
}
