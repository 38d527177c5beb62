//! Experiment configuration: one TOML section per module, keys named after
//! the struct fields, timing presets for the sync interval.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::{AnalyticModel, AnalyticParams};
use crate::dissemination::{Flooding, SchemeConfig};
use crate::error::ConfigError;
use crate::mac::MacParams;
use crate::mobility::{build_manhattan_grid, GridSpec, MobilityConfig};
use crate::radio::{RadioParams, TrafficParams};
use crate::scenario::WorldConfig;
use crate::sim::{SiPreset, SyncIntervalConfig};
use crate::types::{Sch, Scheme};

/// Sweep axes. An empty axis falls back to the single value from the
/// `[scheme]` or `[si]` section.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sweep {
    pub schemes: Vec<Scheme>,
    pub y: Vec<u8>,
    /// us
    pub e1: Vec<u64>,
    pub flooding: Vec<Flooding>,
}

/// One combination of sweep values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SweepPoint {
    pub scheme: Scheme,
    pub y: u8,
    pub e1: u64,
    pub flooding: Flooding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: SiPreset,
    pub si: SyncIntervalConfig,
    pub grid: GridSpec,
    pub mobility: MobilityConfig,
    pub radio: RadioParams,
    pub mac: MacParams,
    pub traffic: TrafficParams,
    pub queue: AnalyticParams,
    pub scheme: SchemeConfig,
    pub seeds: Vec<u64>,
    /// Measured run length, s.
    pub duration: f64,
    /// Discarded lead-in, s.
    pub warmup: f64,
    /// us
    pub mobility_tick: u64,
    pub emergency: bool,
    pub trace: bool,
    pub sweep: Sweep,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: SiPreset::Std50,
            si: SiPreset::Std50.config(),
            grid: GridSpec::default(),
            mobility: MobilityConfig::default(),
            radio: RadioParams::default(),
            mac: MacParams::default(),
            traffic: TrafficParams::default(),
            queue: AnalyticParams::default(),
            scheme: SchemeConfig::default(),
            seeds: vec![1],
            duration: 2.0,
            warmup: 0.5,
            mobility_tick: 100_000,
            emergency: true,
            trace: false,
            sweep: Sweep::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    si: RawSi,
    #[serde(default)]
    grid: GridSpec,
    #[serde(default)]
    mobility: MobilityConfig,
    #[serde(default)]
    radio: RadioParams,
    #[serde(default)]
    mac: MacParams,
    #[serde(default)]
    traffic: TrafficParams,
    #[serde(default)]
    queue: AnalyticParams,
    #[serde(default)]
    scheme: SchemeConfig,
    #[serde(default)]
    sweep: Sweep,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawExperiment {
    seeds: Option<Vec<u64>>,
    /// Shorthand for seeds 1..=n.
    seed_count: Option<u64>,
    duration: f64,
    warmup: f64,
    mobility_tick: u64,
    emergency: bool,
    trace: bool,
    output_dir: PathBuf,
}

impl Default for RawExperiment {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        RawExperiment {
            seeds: None,
            seed_count: None,
            duration: d.duration,
            warmup: d.warmup,
            mobility_tick: d.mobility_tick,
            emergency: d.emergency,
            trace: d.trace,
            output_dir: d.output_dir,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSi {
    preset: Option<String>,
    si_length: Option<u64>,
    guard: Option<u64>,
    e1: Option<u64>,
    e2: Option<u64>,
    e3: Option<u64>,
    cchi: Option<u64>,
    schi: Option<u64>,
}

impl RawSi {
    fn resolve(&self) -> Result<(SiPreset, SyncIntervalConfig), ConfigError> {
        let preset = match &self.preset {
            None => SiPreset::Std50,
            Some(name) => SiPreset::parse(name).ok_or_else(|| ConfigError::UnknownPreset {
                key: "si.preset".into(),
                name: name.clone(),
            })?,
        };
        let mut si = preset.config();
        si.si_length = self.si_length.unwrap_or(si.si_length);
        si.guard = self.guard.unwrap_or(si.guard);
        si.e1 = self.e1.unwrap_or(si.e1);
        si.e2 = self.e2.unwrap_or(si.e2);
        si.e3 = self.e3.unwrap_or(si.e3);
        // Left out, the CCHI follows its sub-slots, as with_e1 does.
        si.cchi = self.cchi.unwrap_or(si.guard + si.e1 + si.e2 + si.e3);
        si.schi = self.schi.unwrap_or(si.si_length.saturating_sub(si.cchi));
        Ok((preset, si))
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Parse {
        key: String::new(),
        message: e.message().to_string(),
    })?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse {
        key: e.path().to_string(),
        message: e.into_inner().message().to_string(),
    })?;
    let (preset, si) = raw.si.resolve()?;
    let seeds = match (raw.experiment.seeds, raw.experiment.seed_count) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::invariant(
                &["experiment.seeds", "experiment.seed_count"],
                "give one or the other",
            ))
        }
        (Some(s), None) => s,
        (None, Some(n)) => (1..=n).collect(),
        (None, None) => vec![1],
    };
    let cfg = ExperimentConfig {
        preset,
        si,
        grid: raw.grid,
        mobility: raw.mobility,
        radio: raw.radio,
        mac: raw.mac,
        traffic: raw.traffic,
        queue: raw.queue,
        scheme: raw.scheme,
        seeds,
        duration: raw.experiment.duration,
        warmup: raw.experiment.warmup,
        mobility_tick: raw.experiment.mobility_tick,
        emergency: raw.experiment.emergency,
        trace: raw.experiment.trace,
        sweep: raw.sweep,
        output_dir: raw.experiment.output_dir,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn with_preset(mut self, preset: SiPreset) -> Self {
        self.preset = preset;
        self.si = preset.config();
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.si.validate()?;
        build_manhattan_grid(&self.grid).map_err(|e| {
            ConfigError::invariant(
                &[
                    "grid.width",
                    "grid.height",
                    "grid.horizontal_streets",
                    "grid.vertical_streets",
                ],
                e.to_string(),
            )
        })?;
        self.mobility.validate()?;
        self.radio.validate()?;
        self.mac.validate()?;
        self.scheme.validate()?;
        if !(self.traffic.beta >= 0.0) {
            return Err(ConfigError::invariant(&["traffic.beta"], "must be >= 0"));
        }
        if !(self.queue.lambda >= 0.0) {
            return Err(ConfigError::invariant(&["queue.lambda"], "must be >= 0"));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::invariant(
                &["experiment.seeds"],
                "need at least one seed",
            ));
        }
        if !(self.duration > 0.0) || !(self.warmup >= 0.0) {
            return Err(ConfigError::invariant(
                &["experiment.duration", "experiment.warmup"],
                "duration must be > 0 and warmup >= 0",
            ));
        }
        if self.mobility_tick == 0 {
            return Err(ConfigError::invariant(
                &["experiment.mobility_tick"],
                "must be > 0",
            ));
        }
        if let Some(y) = self.sweep.y.iter().find(|y| !(1..=Sch::MAX).contains(*y)) {
            return Err(ConfigError::invariant(
                &["sweep.y"],
                format!("{y} is outside [1, 6]"),
            ));
        }
        for e1 in &self.sweep.e1 {
            self.si
                .with_e1(*e1)
                .validate()
                .map_err(|e| ConfigError::invariant(&["sweep.e1"], format!("e1 = {e1} us: {e}")))?;
        }
        Ok(())
    }

    /// All sweep points in a fixed order.
    pub fn points(&self) -> Vec<SweepPoint> {
        fn axis<T: Copy>(v: &[T], fallback: T) -> Vec<T> {
            if v.is_empty() {
                vec![fallback]
            } else {
                v.to_vec()
            }
        }
        let mut out = Vec::new();
        for scheme in axis(&self.sweep.schemes, self.scheme.scheme) {
            for y in axis(&self.sweep.y, self.scheme.advertised_y) {
                for e1 in axis(&self.sweep.e1, self.si.e1) {
                    for flooding in axis(&self.sweep.flooding, self.scheme.flooding) {
                        out.push(SweepPoint {
                            scheme,
                            y,
                            e1,
                            flooding,
                        });
                    }
                }
            }
        }
        out
    }

    fn sis(&self, seconds: f64) -> u64 {
        (seconds * 1e6 / self.si.si_length as f64).round() as u64
    }

    pub fn scheme_for(&self, point: &SweepPoint) -> SchemeConfig {
        SchemeConfig {
            scheme: point.scheme,
            advertised_y: point.y,
            flooding: point.flooding,
            ..self.scheme
        }
    }

    pub fn model_for(&self, point: &SweepPoint) -> AnalyticModel {
        AnalyticModel {
            radio: self.radio,
            traffic: self.traffic,
            mac: self.mac,
            params: self.queue,
            si: self.si_for(point),
        }
    }

    fn si_for(&self, point: &SweepPoint) -> SyncIntervalConfig {
        if point.e1 == self.si.e1 {
            self.si
        } else {
            self.si.with_e1(point.e1)
        }
    }

    /// Simulator settings for one sweep point.
    pub fn world_for(&self, point: &SweepPoint) -> WorldConfig {
        let model = self.model_for(point);
        let queue_capacity = model.queue().map(|q| q.b_capacity as usize).unwrap_or(20);
        WorldConfig {
            si: model.si,
            grid: self.grid,
            mobility: self.mobility,
            radio: self.radio,
            mac: self.mac,
            traffic: self.traffic,
            analytic: self.queue,
            data_lambda: self.queue.lambda,
            queue_capacity,
            warmup_sis: self.sis(self.warmup),
            measured_sis: self.sis(self.duration).max(1),
            mobility_tick: self.mobility_tick,
            emergency: self.emergency,
            trace: self.trace,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_std_50_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(
            (cfg.si.guard, cfg.si.e1, cfg.si.e2, cfg.si.e3),
            (4_000, 26_000, 5_000, 15_000)
        );
        assert_eq!(cfg.mac.payload_s, 200.0);
        assert_eq!(cfg.seeds, vec![1]);
    }

    #[test]
    fn paper_literal_preset_expands() {
        let cfg = parse_config("[si]\npreset = \"paper-literal\"\n").unwrap();
        assert_eq!((cfg.si.e3, cfg.si.cchi, cfg.si.schi), (20_000, 55_000, 45_000));
    }

    #[test]
    fn unknown_preset_is_named() {
        let err = parse_config("[si]\npreset = \"fast\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownPreset { ref key, .. } if key == "si.preset"));
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let err = parse_config("[mac]\ncw_mni = 3\n").unwrap_err();
        match err {
            ConfigError::Parse { key, message } => {
                assert_eq!(key, "mac.cw_mni");
                assert!(message.contains("cw_mni"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_type_reports_its_path() {
        let err = parse_config("[mobility]\nvehicle_count = \"many\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { ref key, .. } if key == "mobility.vehicle_count"));
    }

    #[test]
    fn slot_sum_mismatch_names_the_four_keys() {
        let err = parse_config("[si]\ne1 = 30000\ncchi = 50000\n").unwrap_err();
        let text = err.to_string();
        for key in ["si.guard", "si.e1", "si.e2", "si.e3"] {
            assert!(text.contains(key), "{text}");
        }
    }

    #[test]
    fn e1_alone_moves_the_cchi_boundary() {
        let cfg = parse_config("[si]\ne1 = 8206\n").unwrap();
        assert_eq!(cfg.si, SiPreset::Std50.config().with_e1(8206));
    }

    #[test]
    fn sweep_axes_multiply() {
        let cfg = parse_config(
            "[experiment]\nseed_count = 2\n[sweep]\nschemes = [\"cmd\", \"wsd\", \"legacy\"]\ny = [1, 2, 3, 4, 5]\n",
        )
        .unwrap();
        assert_eq!(cfg.points().len(), 15);
        assert_eq!(cfg.seeds, vec![1, 2]);
    }

    #[test]
    fn e1_sweep_values_must_fit() {
        assert!(parse_config("[sweep]\ne1 = [8000, 99000]\n").is_err());
    }
}
