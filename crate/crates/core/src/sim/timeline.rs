//! The 100 ms synchronization interval and its CCHI sub-slots.
//!
//! Layout of one interval, starting at `n * si_length`:
//!
//! ```text
//! | guard | e1 (BSM + WSA) | e2 (averages) | e3 (LAD exchange) |        SCHI        |
//! 0     guard          +e1             +e2                cchi            si_length
//! ```

use serde::{Deserialize, Serialize};

use super::SimTime;
use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncIntervalConfig {
    pub si_length: u64,
    pub guard: u64,
    pub e1: u64,
    pub e2: u64,
    pub e3: u64,
    pub cchi: u64,
    pub schi: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Guard,
    E1,
    E2,
    E3,
    Schi,
}

impl Phase {
    pub const ALL: [Phase; 5] = [Phase::Guard, Phase::E1, Phase::E2, Phase::E3, Phase::Schi];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Guard => "guard",
            Phase::E1 => "e1",
            Phase::E2 => "e2",
            Phase::E3 => "e3",
            Phase::Schi => "schi",
        }
    }
}

/// Named timing presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiPreset {
    /// guard 4, e1 26, e2 5, e3 20 ms: a 55 ms CCHI and a 45 ms SCHI.
    #[serde(rename = "paper-literal")]
    PaperLiteral,
    /// guard 4, e1 26, e2 5, e3 15 ms inside the standard 50/50 split.
    #[serde(rename = "std-50")]
    Std50,
}

impl SiPreset {
    pub fn parse(name: &str) -> Option<SiPreset> {
        match name {
            "paper-literal" => Some(SiPreset::PaperLiteral),
            "std-50" => Some(SiPreset::Std50),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SiPreset::PaperLiteral => "paper-literal",
            SiPreset::Std50 => "std-50",
        }
    }

    pub fn config(self) -> SyncIntervalConfig {
        match self {
            SiPreset::PaperLiteral => SyncIntervalConfig::from_slots(100_000, 4_000, 26_000, 5_000, 20_000),
            SiPreset::Std50 => SyncIntervalConfig::from_slots(100_000, 4_000, 26_000, 5_000, 15_000),
        }
    }
}

impl Default for SyncIntervalConfig {
    fn default() -> Self {
        SiPreset::Std50.config()
    }
}

impl SyncIntervalConfig {
    /// Builds a layout whose CCHI is exactly `guard + e1 + e2 + e3`.
    pub fn from_slots(si_length: u64, guard: u64, e1: u64, e2: u64, e3: u64) -> Self {
        let cchi = guard + e1 + e2 + e3;
        SyncIntervalConfig {
            si_length,
            guard,
            e1,
            e2,
            e3,
            cchi,
            schi: si_length.saturating_sub(cchi),
        }
    }

    /// Same layout with a different e1 length; the CCHI grows or shrinks and the
    /// SCHI absorbs the difference.
    pub fn with_e1(&self, e1: u64) -> Self {
        Self::from_slots(self.si_length, self.guard, e1, self.e2, self.e3)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("si.si_length", self.si_length),
            ("si.guard", self.guard),
            ("si.e1", self.e1),
            ("si.e2", self.e2),
            ("si.e3", self.e3),
            ("si.cchi", self.cchi),
            ("si.schi", self.schi),
        ];
        for (key, value) in fields {
            if value == 0 {
                return Err(ConfigError::invariant(&[key], "must be > 0"));
            }
        }
        if self.guard + self.e1 + self.e2 + self.e3 != self.cchi {
            return Err(ConfigError::invariant(
                &["si.guard", "si.e1", "si.e2", "si.e3"],
                format!(
                    "guard + e1 + e2 + e3 = {} but cchi = {}",
                    self.guard + self.e1 + self.e2 + self.e3,
                    self.cchi
                ),
            ));
        }
        if self.cchi + self.schi != self.si_length {
            return Err(ConfigError::invariant(
                &["si.cchi", "si.schi", "si.si_length"],
                format!(
                    "cchi + schi = {} but si_length = {}",
                    self.cchi + self.schi,
                    self.si_length
                ),
            ));
        }
        Ok(())
    }

    /// Offset from the interval start at which `phase` begins.
    pub fn phase_offset(&self, phase: Phase) -> u64 {
        match phase {
            Phase::Guard => 0,
            Phase::E1 => self.guard,
            Phase::E2 => self.guard + self.e1,
            Phase::E3 => self.guard + self.e1 + self.e2,
            Phase::Schi => self.cchi,
        }
    }

    pub fn phase_len(&self, phase: Phase) -> u64 {
        match phase {
            Phase::Guard => self.guard,
            Phase::E1 => self.e1,
            Phase::E2 => self.e2,
            Phase::E3 => self.e3,
            Phase::Schi => self.schi,
        }
    }

    pub fn si_index(&self, t: SimTime) -> u64 {
        t.as_us() / self.si_length
    }

    pub fn si_start(&self, index: u64) -> SimTime {
        SimTime(index * self.si_length)
    }

    /// Absolute `[start, end)` of `phase` within interval `index`.
    pub fn window(&self, index: u64, phase: Phase) -> (SimTime, SimTime) {
        let start = self.si_start(index) + self.phase_offset(phase);
        (start, start + self.phase_len(phase))
    }

    pub fn in_cchi(&self, t: SimTime) -> bool {
        t.as_us() % self.si_length < self.cchi
    }
}

/// Classifies `t` into the phase of its synchronization interval.
pub fn si_phase(t: SimTime, cfg: &SyncIntervalConfig) -> Phase {
    let offset = t.as_us() % cfg.si_length;
    if offset < cfg.guard {
        Phase::Guard
    } else if offset < cfg.guard + cfg.e1 {
        Phase::E1
    } else if offset < cfg.guard + cfg.e1 + cfg.e2 {
        Phase::E2
    } else if offset < cfg.cchi {
        Phase::E3
    } else {
        Phase::Schi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn std50() -> SyncIntervalConfig {
        SiPreset::Std50.config()
    }

    #[test]
    fn classifies_examples() {
        let cfg = std50();
        assert_eq!(si_phase(SimTime::from_ms(2), &cfg), Phase::Guard);
        assert_eq!(si_phase(SimTime::from_ms(31), &cfg), Phase::E2);
        assert_eq!(si_phase(SimTime::from_ms(160), &cfg), Phase::Schi);
    }

    #[test]
    fn boundaries_belong_to_the_later_phase() {
        let cfg = std50();
        assert_eq!(si_phase(SimTime::from_ms(4), &cfg), Phase::E1);
        assert_eq!(si_phase(SimTime::from_ms(30), &cfg), Phase::E2);
        assert_eq!(si_phase(SimTime::from_ms(35), &cfg), Phase::E3);
        assert_eq!(si_phase(SimTime::from_ms(50), &cfg), Phase::Schi);
        assert_eq!(si_phase(SimTime::from_ms(100), &cfg), Phase::Guard);
    }

    #[test]
    fn presets_validate() {
        for preset in [SiPreset::PaperLiteral, SiPreset::Std50] {
            preset.config().validate().unwrap();
        }
        let lit = SiPreset::PaperLiteral.config();
        assert_eq!((lit.cchi, lit.schi), (55_000, 45_000));
    }

    #[test]
    fn rejects_inconsistent_cchi() {
        let mut cfg = std50();
        cfg.e3 = 20_000;
        let err = cfg.validate().unwrap_err().to_string();
        for key in ["si.guard", "si.e1", "si.e2", "si.e3"] {
            assert!(err.contains(key), "{err}");
        }
    }

    #[test]
    fn with_e1_keeps_the_interval_length() {
        let cfg = std50().with_e1(8_000);
        cfg.validate().unwrap();
        assert_eq!(cfg.cchi, 32_000);
        assert_eq!(cfg.schi, 68_000);
    }

    proptest! {
        #[test]
        fn phases_partition_the_interval(
            guard in 1u64..10_000, e1 in 1u64..40_000, e2 in 1u64..10_000,
            e3 in 1u64..30_000, extra in 1u64..50_000, t in 0u64..1_000_000,
        ) {
            let cfg = SyncIntervalConfig::from_slots(guard + e1 + e2 + e3 + extra, guard, e1, e2, e3);
            let phase = si_phase(SimTime(t), &cfg);
            let offset = t % cfg.si_length;
            let hits = Phase::ALL
                .iter()
                .filter(|p| {
                    let start = cfg.phase_offset(**p);
                    offset >= start && offset < start + cfg.phase_len(**p)
                })
                .collect::<Vec<_>>();
            prop_assert_eq!(hits, vec![&phase]);
        }
    }
}
