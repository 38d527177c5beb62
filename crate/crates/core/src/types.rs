//! Identifiers and geometry shared across the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Service channel number, 1 through 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sch(pub u8);

impl Sch {
    pub const MAX: u8 = 6;

    /// The first `y` service channels.
    pub fn advertised(y: u8) -> impl Iterator<Item = Sch> {
        (1..=y.min(Self::MAX)).map(Sch)
    }
}

impl fmt::Display for Sch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SCH{}", self.0)
    }
}

/// One of the seven WAVE channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Cch,
    Sch(Sch),
}

impl Channel {
    /// Numeric id used in CSV output: 0 for the CCH, 1..=6 for service channels.
    pub fn id(self) -> u8 {
        match self {
            Channel::Cch => 0,
            Channel::Sch(s) => s.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Position {
        Position::new(self.x + dx, self.y + dy)
    }

    pub fn scale(&self, s: f64) -> Position {
        Position::new(self.x * s, self.y * s)
    }
}

/// Emergency dissemination scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Cmd,
    Wsd,
    Legacy,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Cmd, Scheme::Wsd, Scheme::Legacy];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Cmd => "cmd",
            Scheme::Wsd => "wsd",
            Scheme::Legacy => "legacy",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
