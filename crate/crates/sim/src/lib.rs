//! Discrete-event simulation of the dropmark flagging attack and the
//! plugin-based padding defense against it.
//!
//! The world is four nodes on a line (client, guard, middle relay, exit)
//! plus a destination server folded into the exit's reply delay. Everything
//! runs on one event heap with microsecond timestamps and one seeded RNG,
//! so a run is a pure function of its configuration: same config, same
//! cells, same CSV bytes.
//!
//! The defense is not hard-coded into the relays. It is a bundle of six
//! bytecode entry points, assembled at startup and loaded through the
//! plugin manager on both the client and the middle relay, exactly as a
//! deployed plugin would be.

pub mod bayes;
pub mod cell;
pub mod config;
pub mod defense;
pub mod detect;
pub mod metrics;
pub mod world;

pub use bayes::posterior;
pub use cell::{CellKind, Dir};
pub use config::{DetectorConfig, DetectorMode, SimConfig};
pub use metrics::{to_csv, CircuitRecord, SimReport};
pub use world::{run, Sim};
