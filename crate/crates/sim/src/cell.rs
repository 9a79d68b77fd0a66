//! Cells on the wire. Kinds matter to relays and endpoints; the flagging
//! detector deliberately ignores them and sees only arrival times.

/// Which way a cell is traveling along the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    /// Toward the exit.
    Out,
    /// Toward the client.
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Create,
    Created,
    Begin,
    Connected,
    Data,
    Close,
    /// Cover traffic emitted by a padding machine.
    Padding,
    /// Junk a marking exit injects before the stream exists.
    Junk,
    /// In-band signal addressed to a cooperating relay's padding machine.
    Signal(u8),
}

impl CellKind {
    /// Kinds a conservative relay refuses to forward toward the client
    /// while the circuit has no established stream yet.
    pub fn suspicious_inbound(self) -> bool {
        matches!(self, CellKind::Data | CellKind::Junk)
    }
}
