use std::path::PathBuf;

use thiserror::Error;

use crate::sim::SimTime;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{key}: {message}")]
    Parse { key: String, message: String },
    #[error("invalid {}: {message}", keys.join(", "))]
    Invariant { keys: Vec<String>, message: String },
    #[error("unknown preset {name:?} at {key} (expected \"paper-literal\" or \"std-50\")")]
    UnknownPreset { key: String, name: String },
}

impl ConfigError {
    pub fn invariant(keys: &[&str], message: impl Into<String>) -> Self {
        ConfigError::Invariant {
            keys: keys.iter().map(|k| k.to_string()).collect(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("cannot schedule at {requested}, clock is already at {now}")]
    ScheduleInPast { requested: SimTime, now: SimTime },
    #[error("cannot run until {requested}, clock is already at {now}")]
    RunIntoPast { requested: SimTime, now: SimTime },
}

#[derive(Debug, Error, PartialEq)]
pub enum MobilityError {
    #[error("a Manhattan grid needs at least 2 streets per axis, got {horizontal}x{vertical}")]
    DegenerateGrid { horizontal: usize, vertical: usize },
    #[error("grid dimensions must be positive, got {width} x {height} m")]
    NonPositiveExtent { width: f64, height: f64 },
    #[error("trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error(
        "carrier-sense range is inconsistent: near branch gives {near:.3} m outside [{d0}, {d_c:.3}] \
         and far branch gives {far:.3} m which is not beyond d_c"
    )]
    BranchInconsistent { near: f64, far: f64, d0: f64, d_c: f64 },
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("back-off blocking probability p_b = 1 freezes the chain forever")]
    ChainNeverAdvances,
    #[error("{name} = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error(transparent)]
    Radio(#[from] RadioError),
}

impl AnalyticsError {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        AnalyticsError::Domain { name, value, domain }
    }
}
