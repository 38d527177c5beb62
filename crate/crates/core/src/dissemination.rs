//! Emergency dissemination during the SCHI under CMD, WSD and the legacy
//! wait-for-CCHI behaviour, optionally with single-hop blind flooding.
//!
//! The event-level mechanics live in [`crate::scenario`]; this module holds
//! the scheme configuration, the per-scheme planning rules and the report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::scenario::{StaticScenario, World};
use crate::sim::{Phase, SimTime, SyncIntervalConfig};
use crate::types::{Sch, Scheme, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Flooding {
    #[default]
    None,
    Shbf,
}

impl Flooding {
    pub fn name(self) -> &'static str {
        match self {
            Flooding::None => "none",
            Flooding::Shbf => "shbf",
        }
    }

    pub fn parse(s: &str) -> Option<Flooding> {
        [Flooding::None, Flooding::Shbf]
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
    }
}

/// Whether a frame is a first transmission or a flooding repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hop {
    Original,
    Rebroadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// us
    pub switching_delay: u64,
    pub flooding: Flooding,
    pub advertised_y: u8,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: Scheme::Cmd,
            switching_delay: 2_000,
            flooding: Flooding::None,
            advertised_y: 3,
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=Sch::MAX).contains(&self.advertised_y) {
            return Err(ConfigError::invariant(
                &["scheme.advertised_y"],
                format!("must lie in [1, 6], got {}", self.advertised_y),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmergencyMessage {
    pub msg_id: u64,
    pub origin_id: VehicleId,
    pub invocation_time: SimTime,
    pub origin_sch: Sch,
    pub payload_size: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisseminationReport {
    pub message: EmergencyMessage,
    /// First reception by any vehicle whose home is the SCH (origin excluded).
    pub per_channel_delivery: BTreeMap<Sch, SimTime>,
    /// Mean delivery delay over the reached vehicles of each SCH, us.
    pub per_channel_mean_delay: BTreeMap<Sch, f64>,
    /// Reached vehicles per home SCH, origin excluded.
    pub per_channel_reached: BTreeMap<Sch, u32>,
    pub per_vehicle_delivery: BTreeMap<VehicleId, Option<SimTime>>,
    /// Invocation to the last channel's first delivery, s. None if no
    /// channel was reached.
    pub total_delay: Option<f64>,
    pub switch_count: u32,
    /// Emergency transmissions lost to collision at one or more receivers.
    pub collisions: u32,
    /// Emergency frames put on air, including flooding repeats.
    pub transmissions: u32,
    /// Populated SCHs (counting vehicles other than the origin) never reached.
    pub unreached_channels: Vec<Sch>,
    pub prr: Option<f64>,
}

impl DisseminationReport {
    pub fn reached_channels(&self) -> usize {
        self.per_channel_delivery.len()
    }
}

/// Orders WSD's foreign channels by mean delay per vehicle, ascending.
/// Channels nobody is known to use are skipped; ties go to the lower SCH.
pub fn wsd_schedule(channel_stats: &BTreeMap<Sch, (f64, u32)>) -> Vec<Sch> {
    let mut ranked: Vec<(Sch, f64)> = channel_stats
        .iter()
        .filter(|(_, (_, n))| *n > 0)
        .map(|(sch, (delay, n))| (*sch, delay / *n as f64))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().map(|(sch, _)| sch).collect()
}

/// Earliest instant a legacy node may transmit on the CCH: immediately inside
/// the CCHI, otherwise after the guard of the next interval.
pub fn legacy_wait(invocation: SimTime, si: &SyncIntervalConfig) -> SimTime {
    match crate::sim::si_phase(invocation, si) {
        Phase::Schi => si.si_start(si.si_index(invocation) + 1) + si.guard,
        Phase::Guard => si.si_start(si.si_index(invocation)) + si.guard,
        _ => invocation,
    }
}

/// Runs one emergency on a frozen snapshot, starting at SCHI start.
pub fn run_scheme(
    cfg: &SchemeConfig,
    scenario: &StaticScenario,
    emergency: &EmergencyMessage,
) -> DisseminationReport {
    World::from_snapshot(scenario, *cfg).run_emergency(emergency)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wsd_order_examples() {
        let stats = BTreeMap::from([(Sch(1), (10e-3, 5)), (Sch(2), (6e-3, 2))]);
        assert_eq!(wsd_schedule(&stats), vec![Sch(1), Sch(2)]);
        let tie = BTreeMap::from([(Sch(4), (4e-3, 2)), (Sch(3), (2e-3, 1))]);
        assert_eq!(wsd_schedule(&tie), vec![Sch(3), Sch(4)]);
        let single = BTreeMap::from([(Sch(2), (1e-3, 3))]);
        assert_eq!(wsd_schedule(&single), vec![Sch(2)]);
        let empty = BTreeMap::from([(Sch(2), (1e-3, 0)), (Sch(5), (1e-3, 1))]);
        assert_eq!(wsd_schedule(&empty), vec![Sch(5)]);
    }

    #[test]
    fn legacy_wait_examples() {
        let si = SyncIntervalConfig::default();
        assert_eq!(legacy_wait(SimTime::from_ms(60), &si), SimTime::from_ms(104));
        assert_eq!(legacy_wait(SimTime::from_ms(10), &si), SimTime::from_ms(10));
        assert_eq!(legacy_wait(SimTime(99_999), &si), SimTime::from_ms(104));
        assert_eq!(legacy_wait(SimTime::from_ms(101), &si), SimTime::from_ms(104));
    }

    #[test]
    fn flooding_names_round_trip() {
        for f in [Flooding::None, Flooding::Shbf] {
            assert_eq!(Flooding::parse(f.name()), Some(f));
        }
        assert_eq!(Flooding::parse("storm"), None);
    }
}
