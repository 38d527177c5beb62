//! Manhattan-grid mobility.
//!
//! Streets span the full extent of the grid, one lane each. Vehicles drive at a
//! constant per-vehicle speed and decide at every intersection whether to turn
//! (left or right with equal probability) or continue straight. A vehicle that
//! reaches the edge of the grid turns onto whichever cross street is available.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::MobilityError;
use crate::sim::SimTime;
use crate::types::{Position, Sch, VehicleId};

const ON_STREET_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub width: f64,
    pub height: f64,
    pub horizontal_streets: usize,
    pub vertical_streets: usize,
}

impl Default for GridSpec {
    /// 1500 m x 1500 m with two streets per axis: 6 km of road.
    fn default() -> Self {
        GridSpec {
            width: 1500.0,
            height: 1500.0,
            horizontal_streets: 2,
            vertical_streets: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    pub width: f64,
    pub height: f64,
    pub horizontal_streets: usize,
    pub vertical_streets: usize,
    pub lane_per_street: usize,
}

pub fn build_manhattan_grid(spec: &GridSpec) -> Result<RoadNetwork, MobilityError> {
    if spec.horizontal_streets < 2 || spec.vertical_streets < 2 {
        return Err(MobilityError::DegenerateGrid {
            horizontal: spec.horizontal_streets,
            vertical: spec.vertical_streets,
        });
    }
    if !(spec.width > 0.0 && spec.height > 0.0) {
        return Err(MobilityError::NonPositiveExtent {
            width: spec.width,
            height: spec.height,
        });
    }
    Ok(RoadNetwork {
        width: spec.width,
        height: spec.height,
        horizontal_streets: spec.horizontal_streets,
        vertical_streets: spec.vertical_streets,
        lane_per_street: 1,
    })
}

impl RoadNetwork {
    pub fn spacing_x(&self) -> f64 {
        self.width / (self.vertical_streets - 1) as f64
    }

    pub fn spacing_y(&self) -> f64 {
        self.height / (self.horizontal_streets - 1) as f64
    }

    pub fn intersection_count(&self) -> usize {
        self.horizontal_streets * self.vertical_streets
    }

    pub fn total_length(&self) -> f64 {
        self.horizontal_streets as f64 * self.width + self.vertical_streets as f64 * self.height
    }

    fn street_x(&self, i: usize) -> f64 {
        i as f64 * self.spacing_x()
    }

    fn street_y(&self, j: usize) -> f64 {
        j as f64 * self.spacing_y()
    }

    fn on_vertical(&self, x: f64) -> bool {
        let i = (x / self.spacing_x()).round();
        i >= 0.0 && i < self.vertical_streets as f64 && (x - i * self.spacing_x()).abs() <= ON_STREET_EPS
    }

    fn on_horizontal(&self, y: f64) -> bool {
        let j = (y / self.spacing_y()).round();
        j >= 0.0 && j < self.horizontal_streets as f64 && (y - j * self.spacing_y()).abs() <= ON_STREET_EPS
    }

    pub fn is_on_network(&self, p: &Position) -> bool {
        let inside = p.x >= -ON_STREET_EPS
            && p.x <= self.width + ON_STREET_EPS
            && p.y >= -ON_STREET_EPS
            && p.y <= self.height + ON_STREET_EPS;
        inside && (self.on_vertical(p.x) || self.on_horizontal(p.y))
    }

    /// Uniform point on the road network with a heading along its street.
    pub fn random_placement<R: Rng>(&self, rng: &mut R) -> (Position, Heading) {
        let horizontal_len = self.horizontal_streets as f64 * self.width;
        let pick = rng.random::<f64>() * self.total_length();
        let forward = rng.random::<bool>();
        if pick < horizontal_len {
            let j = ((pick / self.width) as usize).min(self.horizontal_streets - 1);
            let x = rng.random::<f64>() * self.width;
            let heading = if forward { Heading::E } else { Heading::W };
            (Position::new(x, self.street_y(j)), heading)
        } else {
            let i = (((pick - horizontal_len) / self.height) as usize).min(self.vertical_streets - 1);
            let y = rng.random::<f64>() * self.height;
            let heading = if forward { Heading::N } else { Heading::S };
            (Position::new(self.street_x(i), y), heading)
        }
    }

    /// Next intersection strictly ahead of `p` along `h`, with its distance.
    fn next_intersection(&self, p: Position, h: Heading) -> Option<(Position, f64)> {
        let ahead = |coord: f64, spacing: f64, count: usize, positive: bool| -> Option<f64> {
            let steps = coord / spacing;
            let idx = if positive {
                (steps + ON_STREET_EPS / spacing).floor() + 1.0
            } else {
                (steps - ON_STREET_EPS / spacing).ceil() - 1.0
            };
            (idx >= 0.0 && idx < count as f64).then_some(idx * spacing)
        };
        match h {
            Heading::E => ahead(p.x, self.spacing_x(), self.vertical_streets, true)
                .map(|x| (Position::new(x, p.y), x - p.x)),
            Heading::W => ahead(p.x, self.spacing_x(), self.vertical_streets, false)
                .map(|x| (Position::new(x, p.y), p.x - x)),
            Heading::N => ahead(p.y, self.spacing_y(), self.horizontal_streets, true)
                .map(|y| (Position::new(p.x, y), y - p.y)),
            Heading::S => ahead(p.y, self.spacing_y(), self.horizontal_streets, false)
                .map(|y| (Position::new(p.x, y), p.y - y)),
        }
    }

    /// Whether a street leaves intersection `p` in direction `h`.
    fn can_leave(&self, p: Position, h: Heading) -> bool {
        match h {
            Heading::E => p.x < self.width - ON_STREET_EPS,
            Heading::W => p.x > ON_STREET_EPS,
            Heading::N => p.y < self.height - ON_STREET_EPS,
            Heading::S => p.y > ON_STREET_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    N,
    S,
    E,
    W,
}

impl Heading {
    pub fn unit(self) -> (f64, f64) {
        match self {
            Heading::N => (0.0, 1.0),
            Heading::S => (0.0, -1.0),
            Heading::E => (1.0, 0.0),
            Heading::W => (-1.0, 0.0),
        }
    }

    pub fn left(self) -> Heading {
        match self {
            Heading::N => Heading::W,
            Heading::W => Heading::S,
            Heading::S => Heading::E,
            Heading::E => Heading::N,
        }
    }

    pub fn right(self) -> Heading {
        self.left().reverse()
    }

    pub fn reverse(self) -> Heading {
        match self {
            Heading::N => Heading::S,
            Heading::S => Heading::N,
            Heading::E => Heading::W,
            Heading::W => Heading::E,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub position: Position,
    pub heading: Heading,
    /// m/s
    pub speed: f64,
    pub selected_sch: Option<Sch>,
    pub spawn_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    /// m/s
    pub mean_speed: f64,
    pub turn_probability: f64,
    pub vehicle_count: usize,
    /// Poisson spawn rate in vehicles per second.
    pub spawn_rate: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            mean_speed: 40.0 / 3.6,
            turn_probability: 0.5,
            vehicle_count: 50,
            spawn_rate: 100.0,
        }
    }
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<(), crate::error::ConfigError> {
        use crate::error::ConfigError;
        if !(0.0..=1.0).contains(&self.turn_probability) {
            return Err(ConfigError::invariant(
                &["mobility.turn_probability"],
                "must lie in [0, 1]",
            ));
        }
        if !(self.mean_speed > 0.0) {
            return Err(ConfigError::invariant(&["mobility.mean_speed"], "must be > 0"));
        }
        if !(self.spawn_rate > 0.0) {
            return Err(ConfigError::invariant(&["mobility.spawn_rate"], "must be > 0"));
        }
        Ok(())
    }
}

/// Intersection decisions taken during one step. Forced turns at the grid
/// edge are not decisions and are not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TurnTally {
    pub decisions: u64,
    pub turns: u64,
}

pub fn step<R: Rng>(
    v: &VehicleState,
    dt: f64,
    net: &RoadNetwork,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> VehicleState {
    step_counted(v, dt, net, cfg, rng).0
}

pub fn step_counted<R: Rng>(
    v: &VehicleState,
    dt: f64,
    net: &RoadNetwork,
    cfg: &MobilityConfig,
    rng: &mut R,
) -> (VehicleState, TurnTally) {
    let mut tally = TurnTally::default();
    let mut pos = v.position;
    let mut heading = v.heading;
    let mut remaining = v.speed * dt;
    // Each pass either finishes the step or consumes the distance to one intersection.
    while remaining > 0.0 {
        let Some((ix, dist)) = net.next_intersection(pos, heading) else {
            heading = heading.reverse();
            continue;
        };
        if dist > remaining {
            let (ux, uy) = heading.unit();
            pos = pos.offset(ux * remaining, uy * remaining);
            break;
        }
        pos = ix;
        remaining -= dist;
        heading = choose_heading(net, ix, heading, cfg.turn_probability, rng, &mut tally);
    }
    let next = VehicleState {
        position: pos,
        heading,
        ..v.clone()
    };
    (next, tally)
}

fn choose_heading<R: Rng>(
    net: &RoadNetwork,
    at: Position,
    heading: Heading,
    turn_probability: f64,
    rng: &mut R,
    tally: &mut TurnTally,
) -> Heading {
    let (first, second) = if rng.random::<bool>() {
        (heading.left(), heading.right())
    } else {
        (heading.right(), heading.left())
    };
    let turn = || {
        if net.can_leave(at, first) {
            Some(first)
        } else if net.can_leave(at, second) {
            Some(second)
        } else {
            None
        }
    };
    if net.can_leave(at, heading) {
        tally.decisions += 1;
        if rng.random::<f64>() < turn_probability {
            if let Some(h) = turn() {
                tally.turns += 1;
                return h;
            }
        }
        heading
    } else {
        turn().unwrap_or(heading.reverse())
    }
}

/// The Manhattan fleet: Poisson spawning plus fixed-tick position updates.
pub struct Fleet {
    net: RoadNetwork,
    cfg: MobilityConfig,
    vehicles: Vec<VehicleState>,
    last_update: Vec<SimTime>,
    spawn_times: Vec<SimTime>,
    tick_us: u64,
    next_tick: SimTime,
    clock: SimTime,
    rng: ChaCha8Rng,
    recorded: Option<Vec<TraceRow>>,
}

impl Fleet {
    pub fn new(net: RoadNetwork, cfg: MobilityConfig, tick_us: u64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = Exp::new(cfg.spawn_rate).expect("spawn rate validated positive");
        let mut t = 0.0;
        let spawn_times = (0..cfg.vehicle_count)
            .map(|_| {
                t += gap.sample(&mut rng);
                SimTime::from_secs_f64(t)
            })
            .collect();
        Fleet {
            net,
            cfg,
            vehicles: Vec::new(),
            last_update: Vec::new(),
            spawn_times,
            tick_us,
            next_tick: SimTime(tick_us),
            clock: SimTime::ZERO,
            rng,
            recorded: None,
        }
    }

    pub fn record_trace(&mut self) {
        self.recorded.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceRow] {
        self.recorded.as_deref().unwrap_or(&[])
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.net
    }

    pub fn spawn_times(&self) -> &[SimTime] {
        &self.spawn_times
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn vehicles_mut(&mut self) -> &mut [VehicleState] {
        &mut self.vehicles
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    /// Applies every spawn and mobility tick up to and including `t`.
    ///
    /// Panics if `t` is earlier than a previously requested time.
    pub fn advance_to(&mut self, t: SimTime) {
        assert!(
            t >= self.clock,
            "fleet cannot rewind from {} to {}",
            self.clock,
            t
        );
        loop {
            let next_spawn = self.spawn_times.get(self.vehicles.len()).copied();
            match next_spawn {
                Some(s) if s <= t && s <= self.next_tick => {
                    self.clock = s;
                    self.spawn(s);
                }
                _ if self.next_tick <= t => {
                    let tick = self.next_tick;
                    self.clock = tick;
                    self.tick(tick);
                    self.next_tick = tick + self.tick_us;
                }
                _ => {
                    self.clock = t;
                    return;
                }
            }
        }
    }

    fn tick(&mut self, t: SimTime) {
        for (v, last) in self.vehicles.iter_mut().zip(self.last_update.iter_mut()) {
            let dt = t.saturating_sub(*last) as f64 * 1e-6;
            if dt > 0.0 {
                *v = step(v, dt, &self.net, &self.cfg, &mut self.rng);
                *last = t;
            }
        }
        if let Some(rows) = self.recorded.as_mut() {
            rows.extend(self.vehicles.iter().map(|v| TraceRow {
                time_s: t.as_secs_f64(),
                id: v.id,
                position: v.position,
            }));
        }
    }

    fn spawn(&mut self, t: SimTime) {
        let (position, heading) = self.net.random_placement(&mut self.rng);
        let speed = self.cfg.mean_speed * self.rng.random_range(0.9..=1.1);
        self.vehicles.push(VehicleState {
            id: VehicleId(self.vehicles.len() as u32),
            position,
            heading,
            speed,
            selected_sch: None,
            spawn_time: t,
        });
        self.last_update.push(t);
    }

    pub fn positions_at(&mut self, t: SimTime) -> Vec<(VehicleId, Position)> {
        self.advance_to(t);
        self.vehicles.iter().map(|v| (v.id, v.position)).collect()
    }
}

/// One `(time_s, id, x, y)` row of a plain-text mobility trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub id: VehicleId,
    pub position: Position,
}

/// Externally supplied positions, replayed as a step function of time.
#[derive(Debug, Clone, Default)]
pub struct MobilityTrace {
    rows: Vec<TraceRow>,
}

impl MobilityTrace {
    pub fn new(mut rows: Vec<TraceRow>) -> Self {
        rows.sort_by(|a, b| a.time_s.total_cmp(&b.time_s).then(a.id.cmp(&b.id)));
        MobilityTrace { rows }
    }

    /// Parses whitespace- or comma-separated rows; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, MobilityError> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|f| !f.is_empty())
                .collect();
            let err = |message: String| MobilityError::Trace { line: n + 1, message };
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
            let id = fields[1]
                .parse::<u32>()
                .map_err(|e| err(format!("{:?}: {e}", fields[1])))?;
            rows.push(TraceRow {
                time_s: num(fields[0])?,
                id: VehicleId(id),
                position: Position::new(num(fields[2])?, num(fields[3])?),
            });
        }
        Ok(Self::new(rows))
    }

    pub fn to_text(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("{} {} {} {}\n", r.time_s, r.id, r.position.x, r.position.y))
            .collect()
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// Latest known position of every vehicle that has appeared by `t`.
    pub fn positions_at(&self, t: SimTime) -> Vec<(VehicleId, Position)> {
        let t = t.as_secs_f64();
        let mut latest = std::collections::BTreeMap::new();
        for r in self.rows.iter().take_while(|r| r.time_s <= t + 1e-9) {
            latest.insert(r.id, r.position);
        }
        latest.into_iter().collect()
    }
}
