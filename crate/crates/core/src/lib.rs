//! Multi-channel emergency dissemination for WAVE vehicular networks.
//!
//! The crate pairs a discrete-event simulator (Manhattan mobility, log-distance
//! radio, CSMA/CA back-off, coordinator election and relay) with the closed-form
//! delay and queueing model used to size the coordination window.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod coordination;
pub mod dissemination;
pub mod error;
pub mod harness;
pub mod mac;
pub mod mobility;
pub mod radio;
pub mod scenario;
pub mod sim;
pub mod types;

pub use error::{AnalyticsError, ConfigError, MobilityError, OutputError, RadioError, SimError};
pub use sim::{si_phase, Engine, Event, EventHandle, Phase, SiPreset, SimTime, SyncIntervalConfig};
pub use types::{Channel, Position, Sch, Scheme, VehicleId};
