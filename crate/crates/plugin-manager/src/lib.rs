//! Hook-based plugin management for a relay.
//!
//! The embedder registers named hooks with a per-hook field-key allowlist,
//! then loads plugin descriptors that attach sandboxed bytecode to those
//! hooks. Dispatching a hook runs the replace attachment (or reports the
//! native default as due), then every add attachment; all guest faults
//! are contained and logged. Namespaces share one sandbox per plugin and
//! decoded programs are cached by content hash, so reloading a known
//! object skips decoding and validation entirely.

pub mod descriptor;
pub mod host;
pub mod manager;

pub use descriptor::{
    AttachMode, DescriptorError, DescriptorErrorKind, EntryPoint, PluginDescriptor,
};
pub use host::{keys, HostEnv, NullHost};
pub use manager::{
    AttachmentId, AttachmentInfo, DispatchOutcome, FaultRecord, HookConfig, HookId, LoadError,
    PluginManager,
};
