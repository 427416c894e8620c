//! Slotted simulator for adaptive video streaming under per-user
//! quality-of-experience constraints on a shared TDMA downlink.
//!
//! The building blocks are usable on their own: [`metrics`] for the
//! second-order eCDF and constraint checks, [`slotsolver`] for the per-slot
//! rate allocation, [`admission`] for quality-estimating admission and
//! [`thresholdopt`] for online threshold tuning. [`engine::run`] wires them
//! into a full simulation and [`experiment`] runs seeded batches of them.

pub mod adaptation;
pub mod admission;
pub mod channel;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod oracle;
pub mod population;
pub mod ratequality;
pub mod rng;
pub mod slotsolver;
pub mod thresholdopt;

pub use adaptation::PolicyKind;
pub use engine::{run, AdmissionMode, RunResult, ScenarioConfig, StopCondition};
pub use error::{Error, Result};
pub use metrics::{ecdf2, ConstraintSet, QualityTrace};
