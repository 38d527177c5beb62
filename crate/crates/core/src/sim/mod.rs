//! Discrete-event engine and the synchronization-interval timeline.

mod engine;
mod time;
mod timeline;

pub use engine::{Engine, Event, EventHandle};
pub use time::SimTime;
pub use timeline::{si_phase, Phase, SiPreset, SyncIntervalConfig};
