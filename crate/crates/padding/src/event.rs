/// Events a padding machine reacts to. Cell-driven events come from the
/// relay's forwarding path; `Activate` and `BeSilent` arrive as in-band
/// signals from a cooperating endpoint; `StateLengthZero` is synthesized
/// when a state's padding budget runs out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MachineEvent {
    NonPaddingSent,
    PaddingSent,
    StateLengthZero,
    CircuitClose,
    Activate,
    BeSilent,
}

impl MachineEvent {
    pub const ALL: [MachineEvent; 6] = [
        MachineEvent::NonPaddingSent,
        MachineEvent::PaddingSent,
        MachineEvent::StateLengthZero,
        MachineEvent::CircuitClose,
        MachineEvent::Activate,
        MachineEvent::BeSilent,
    ];

    /// Stable wire code, used when an event crosses the plugin boundary.
    pub fn code(self) -> u64 {
        match self {
            MachineEvent::NonPaddingSent => 1,
            MachineEvent::PaddingSent => 2,
            MachineEvent::StateLengthZero => 3,
            MachineEvent::CircuitClose => 4,
            MachineEvent::Activate => 5,
            MachineEvent::BeSilent => 6,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        Some(match code {
            1 => MachineEvent::NonPaddingSent,
            2 => MachineEvent::PaddingSent,
            3 => MachineEvent::StateLengthZero,
            4 => MachineEvent::CircuitClose,
            5 => MachineEvent::Activate,
            6 => MachineEvent::BeSilent,
            _ => return None,
        })
    }
}
