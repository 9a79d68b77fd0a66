use crate::dist::Dist;
use crate::event::MachineEvent;
use thiserror::Error;

pub type StateId = usize;

/// One machine state. A state with a `length` distribution emits that many
/// padding cells, spaced by draws from `iat`, then raises
/// [`MachineEvent::StateLengthZero`] on itself. Quiet states carry neither.
#[derive(Debug, Clone)]
pub struct State {
    pub name: String,
    /// Padding budget sampled on entry.
    pub length: Option<Dist>,
    /// Delay before each scheduled padding cell, microseconds.
    pub iat: Option<Dist>,
    pub transitions: Vec<(MachineEvent, StateId)>,
}

impl State {
    pub fn quiet(name: &str) -> Self {
        State {
            name: name.to_string(),
            length: None,
            iat: None,
            transitions: Vec::new(),
        }
    }

    pub fn emitting(name: &str, length: Dist, iat: Dist) -> Self {
        State {
            name: name.to_string(),
            length: Some(length),
            iat: Some(iat),
            transitions: Vec::new(),
        }
    }

    pub fn on(mut self, ev: MachineEvent, to: StateId) -> Self {
        self.transitions.push((ev, to));
        self
    }

    pub fn target(&self, ev: MachineEvent) -> Option<StateId> {
        self.transitions
            .iter()
            .find(|(e, _)| *e == ev)
            .map(|&(_, to)| to)
    }
}

#[derive(Debug, Clone)]
pub struct MachineSpec {
    pub name: String,
    pub states: Vec<State>,
    pub start: StateId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("machine has no states")]
    NoStates,
    #[error("start state {0} does not exist")]
    BadStart(StateId),
    #[error("state {state} transition on {event:?} targets missing state {target}")]
    BadTarget {
        state: StateId,
        event: MachineEvent,
        target: StateId,
    },
    #[error("state {state} has two transitions on {event:?}")]
    AmbiguousEvent { state: StateId, event: MachineEvent },
    #[error("state {state} has a length without an inter-arrival distribution (or vice versa)")]
    HalfEmitting { state: StateId },
}

impl MachineSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.states.is_empty() {
            return Err(SpecError::NoStates);
        }
        if self.start >= self.states.len() {
            return Err(SpecError::BadStart(self.start));
        }
        for (id, st) in self.states.iter().enumerate() {
            if st.length.is_some() != st.iat.is_some() {
                return Err(SpecError::HalfEmitting { state: id });
            }
            let mut seen = Vec::new();
            for &(ev, to) in &st.transitions {
                if to >= self.states.len() {
                    return Err(SpecError::BadTarget {
                        state: id,
                        event: ev,
                        target: to,
                    });
                }
                if seen.contains(&ev) {
                    return Err(SpecError::AmbiguousEvent { state: id, event: ev });
                }
                seen.push(ev);
            }
        }
        Ok(())
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name)
    }
}
