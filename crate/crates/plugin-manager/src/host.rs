//! The host environment a dispatched plugin talks to, and the field keys
//! shared between plugins and hosts.
//!
//! Plugins never see host state directly: every interaction goes through
//! numbered get/set keys plus a handful of action calls. The dispatcher
//! enforces a per-hook key allowlist before the environment is consulted.

use fan_vm::HostCallError;

/// Field keys. `get`/`set` address host state by key; which keys a plugin
/// may touch is configured per hook.
pub mod keys {
    /// Read-only: the parameter the attachment was configured with.
    pub const ATTACHMENT_PARAM: u64 = 0x00;
    /// Whether this relay is the origin (client) of the circuit.
    pub const UTIL_CIRCUIT_IS_ORIGIN: u64 = 0x01;
    /// The circuit's remaining delivery window.
    pub const RELAY_CIRC_DELIVER_WINDOW: u64 = 0x02;
    /// Register a padding machine description with the host.
    pub const CIRCPAD_REGISTER_MACHINE: u64 = 0x10;
    /// Install a registered machine on the current circuit.
    pub const CIRCPAD_INSTALL_MACHINE: u64 = 0x11;
    /// Feed an event to the circuit's padding machine.
    pub const CIRCPAD_MACHINE_EVENT: u64 = 0x12;
}

/// What the embedder exposes to plugins. Argument counts are already
/// validated and the key allowlist already enforced when these run.
pub trait HostEnv {
    fn get(&mut self, key: u64, args: &[u64]) -> Result<u64, HostCallError>;
    fn set(&mut self, key: u64, args: &[u64], value: u64) -> Result<(), HostCallError>;
    fn log(&mut self, bytes: &[u8]);
    fn send_signal_cell(&mut self, param: u64) -> Result<(), HostCallError>;
    fn schedule_padding(&mut self, delay_us: u64) -> Result<(), HostCallError>;
    fn sample_uniform(&mut self, lo: u64, hi: u64) -> u64;
}

/// Environment that answers nothing: unknown keys, no-op log and signals,
/// degenerate sampling. Useful for benches and descriptor smoke tests.
pub struct NullHost;

impl HostEnv for NullHost {
    fn get(&mut self, key: u64, _args: &[u64]) -> Result<u64, HostCallError> {
        Err(HostCallError::UnknownKey { key })
    }

    fn set(&mut self, key: u64, _args: &[u64], _value: u64) -> Result<(), HostCallError> {
        Err(HostCallError::UnknownKey { key })
    }

    fn log(&mut self, _bytes: &[u8]) {}

    fn send_signal_cell(&mut self, _param: u64) -> Result<(), HostCallError> {
        Ok(())
    }

    fn schedule_padding(&mut self, _delay_us: u64) -> Result<(), HostCallError> {
        Ok(())
    }

    fn sample_uniform(&mut self, lo: u64, _hi: u64) -> u64 {
        lo
    }
}
