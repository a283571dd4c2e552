//! Discrete-event simulation of the 5G NR initial-access plane: SIB1
//! broadcast, random access, timing advance, and radio-link supervision,
//! together with the false-base-station manipulations those procedures
//! admit and the observers that detect them.
//!
//! The crate is organized around pure state machines ([`ue`], [`gnb`])
//! driven by a deterministic event engine ([`sim`]). Wire formats live in
//! [`codec`], physical-layer arithmetic in [`timing`] and [`sim::env`].
//! Everything a run produces is derived from its event log, so identical
//! `(scenario, seed)` pairs yield byte-identical output.

pub mod batch;
pub mod codec;
pub mod defaults;
pub mod detect;
pub mod gnb;
pub mod scenario;
pub mod sim;
pub mod timing;
pub mod ue;

pub use scenario::{Scenario, ScenarioError};
pub use sim::metrics::Metrics;
pub use sim::{run_scenario, RunOutput};
