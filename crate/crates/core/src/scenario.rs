//! The simulated world: Manhattan mobility, per-slot CSMA/CA contention on
//! seven channels, CCHI beaconing and coordinator election, SCHI data traffic
//! and emergency dissemination.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::analytics::{AnalyticModel, AnalyticParams};
use crate::coordination::{
    election_rows, lossless_election, own_averages, Bsm, Cfib, CoordinatorAssignment, ElectionRow,
};
use crate::dissemination::{
    legacy_wait, wsd_schedule, DisseminationReport, EmergencyMessage, Flooding, Hop, SchemeConfig,
};
use crate::mac::{
    backoff_step, draw_backoff, BackoffMode, BackoffPhase, BackoffState, MacParams, Medium, Transmission,
    TxId,
};
use crate::mobility::{build_manhattan_grid, Fleet, GridSpec, MobilityConfig};
use crate::radio::{receives, RadioParams, Reception, TrafficParams};
use crate::sim::{Engine, Phase, SimTime, SyncIntervalConfig};
use crate::types::{Channel, Position, Sch, Scheme, VehicleId};

/// Everything a full run needs apart from the scheme and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub si: SyncIntervalConfig,
    pub grid: GridSpec,
    pub mobility: MobilityConfig,
    pub radio: RadioParams,
    pub mac: MacParams,
    pub traffic: TrafficParams,
    pub analytic: AnalyticParams,
    /// Per-vehicle SCHI data frame rate, 1/s. Zero disables data traffic.
    pub data_lambda: f64,
    /// Per-vehicle queue capacity for data and flooding repeats.
    pub queue_capacity: usize,
    pub warmup_sis: u64,
    pub measured_sis: u64,
    /// us
    pub mobility_tick: u64,
    pub emergency: bool,
    pub trace: bool,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            si: SyncIntervalConfig::default(),
            grid: GridSpec::default(),
            mobility: MobilityConfig::default(),
            radio: RadioParams::default(),
            mac: MacParams::default(),
            traffic: TrafficParams::default(),
            analytic: AnalyticParams::default(),
            data_lambda: 10.0,
            queue_capacity: 20,
            warmup_sis: 5,
            measured_sis: 20,
            mobility_tick: 100_000,
            emergency: true,
            trace: false,
        }
    }
}

impl WorldConfig {
    pub fn analytic_model(&self) -> AnalyticModel {
        AnalyticModel {
            radio: self.radio,
            traffic: self.traffic,
            mac: self.mac,
            params: self.analytic,
            si: self.si,
        }
    }

    /// Index of the interval whose SCHI carries the emergency.
    pub fn emergency_si(&self) -> u64 {
        (self.warmup_sis + self.measured_sis).saturating_sub(1)
    }

    fn total_sis(&self) -> u64 {
        self.warmup_sis + self.measured_sis + u64::from(self.emergency)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticVehicle {
    pub id: VehicleId,
    pub position: Position,
    pub home: Sch,
}

/// A frozen snapshot for running a single emergency without mobility or
/// CCHI exchange. Every vehicle is assumed to know every other one.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticScenario {
    pub vehicles: Vec<StaticVehicle>,
    pub si: SyncIntervalConfig,
    pub radio: RadioParams,
    pub mac: MacParams,
    pub traffic: TrafficParams,
    pub analytic: AnalyticParams,
    /// Coordinator roles; `None` runs a lossless election on the positions.
    pub assignments: Option<Vec<CoordinatorAssignment>>,
    pub data_lambda: f64,
    pub seed: u64,
}

impl StaticScenario {
    pub fn new(vehicles: Vec<StaticVehicle>, seed: u64) -> Self {
        StaticScenario {
            vehicles,
            si: SyncIntervalConfig::default(),
            radio: RadioParams::default(),
            mac: MacParams::default(),
            traffic: TrafficParams::default(),
            analytic: AnalyticParams::default(),
            assignments: None,
            data_lambda: 0.0,
            seed,
        }
    }
}

/// PRR/PTR bookkeeping for one beacon window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WindowStats {
    pub si: u64,
    pub e3: bool,
    pub pending: u32,
    pub sent: u32,
    pub received: u64,
    pub in_range: u64,
}

impl WindowStats {
    pub fn prr(&self) -> Option<f64> {
        (self.in_range > 0).then(|| self.received as f64 / self.in_range as f64)
    }

    pub fn ptr(&self) -> Option<f64> {
        (self.pending > 0).then(|| self.sent as f64 / self.pending as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub kind: &'static str,
    pub vehicle: Option<VehicleId>,
    pub channel: Option<Channel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectionRecord {
    pub si: u64,
    pub row: ElectionRow,
}

/// Output of a full run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub windows: Vec<WindowStats>,
    pub elections: Vec<ElectionRecord>,
    /// Per SI, the fraction of spawned vehicles that received at least one e1 BSM.
    pub reachability: Vec<f64>,
    pub collisions: u64,
    pub emergency: Option<DisseminationReport>,
    pub trace: Vec<TraceRecord>,
    pub vehicles: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum FrameKind {
    Beacon {
        si: u64,
        e3: bool,
        origin: VehicleId,
        origin_pos: Position,
        origin_sch: Sch,
        avgs: BTreeMap<Sch, f64>,
        stamp: SimTime,
        hop: Hop,
    },
    Data,
    Emergency {
        msg_id: u64,
        hop: Hop,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Frame {
    id: u64,
    kind: FrameKind,
    channel: Channel,
    mode: BackoffMode,
    not_before: SimTime,
    deadline: SimTime,
}

#[derive(Debug, Clone)]
struct Contention {
    frame: u64,
    backoff: BackoffState,
    difs_left: u32,
}

#[derive(Debug, Clone)]
struct Node {
    id: VehicleId,
    home: Sch,
    pos: Position,
    tuned: Option<Channel>,
    tuned_since: SimTime,
    queue: VecDeque<Frame>,
    contention: Option<Contention>,
    transmitting: bool,
    heard: BTreeMap<VehicleId, (Position, Sch)>,
    avgs: BTreeMap<Sch, f64>,
    cfib: Option<Cfib>,
    targets: Vec<(Sch, f64)>,
    repeated: BTreeSet<(VehicleId, bool)>,
    has_msg: bool,
    repeated_msg: bool,
    relayed: bool,
    plan: VecDeque<Sch>,
    switching: Option<Sch>,
    switch_epoch: u32,
    /// An emergency relay on a service channel is not finished yet.
    obligation: bool,
}

impl Node {
    fn new(id: VehicleId, home: Sch, pos: Position, tuned: Channel, now: SimTime) -> Self {
        Node {
            id,
            home,
            pos,
            tuned: Some(tuned),
            tuned_since: now,
            queue: VecDeque::new(),
            contention: None,
            transmitting: false,
            heard: BTreeMap::new(),
            avgs: BTreeMap::new(),
            cfib: None,
            targets: Vec::new(),
            repeated: BTreeSet::new(),
            has_msg: false,
            repeated_msg: false,
            relayed: false,
            plan: VecDeque::new(),
            switching: None,
            switch_epoch: 0,
            obligation: false,
        }
    }

    fn tune(&mut self, ch: Channel, now: SimTime) {
        if self.tuned != Some(ch) {
            self.tuned = Some(ch);
            self.tuned_since = now;
            self.contention = None;
        }
    }

    /// Index of the first frame that may contend now.
    fn head(&self, now: SimTime) -> Option<usize> {
        let ch = self.tuned?;
        self.queue
            .iter()
            .position(|f| f.channel == ch && f.not_before <= now)
    }

    fn has_work(&self, now: SimTime) -> bool {
        !self.transmitting && self.head(now).is_some()
    }

    fn optional_frames(&self) -> usize {
        self.queue
            .iter()
            .filter(|f| {
                matches!(
                    f.kind,
                    FrameKind::Data
                        | FrameKind::Beacon {
                            hop: Hop::Rebroadcast,
                            ..
                        }
                        | FrameKind::Emergency {
                            hop: Hop::Rebroadcast,
                            ..
                        }
                )
            })
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    SiStart(u64),
    PhaseStart(u64, Phase),
    MobilityTick,
    Spawn,
    Slot,
    TxEnd(TxId),
    SwitchDone(VehicleId, u32),
    DataArrival(VehicleId, u64),
    Invoke,
    LegacyRelease(VehicleId),
}

impl Ev {
    fn name(&self) -> &'static str {
        match self {
            Ev::SiStart(_) => "si_start",
            Ev::PhaseStart(_, Phase::E1) => "e1_start",
            Ev::PhaseStart(_, Phase::E2) => "e2_start",
            Ev::PhaseStart(_, Phase::E3) => "e3_start",
            Ev::PhaseStart(_, _) => "schi_start",
            Ev::MobilityTick => "mobility_tick",
            Ev::Spawn => "spawn",
            Ev::Slot => "slot",
            Ev::TxEnd(_) => "tx_end",
            Ev::SwitchDone(..) => "switch_done",
            Ev::DataArrival(..) => "data_arrival",
            Ev::Invoke => "invoke",
            Ev::LegacyRelease(_) => "legacy_release",
        }
    }
}

#[derive(Debug, Clone)]
struct EmergencyRun {
    msg: EmergencyMessage,
    deliveries: BTreeMap<VehicleId, SimTime>,
    switches: u32,
    collisions: u32,
    transmissions: u32,
}

struct InFlight {
    sender: VehicleId,
    frame: Frame,
    in_range: Vec<VehicleId>,
}

const RNG_MOBILITY: u64 = 0;
const RNG_RADIO: u64 = 1;
const RNG_MAC: u64 = 2;
const RNG_TRAFFIC: u64 = 3;
const RNG_SCENARIO: u64 = 4;

fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(n);
    rng
}

pub struct World {
    cfg: WorldConfig,
    scheme: SchemeConfig,
    model: AnalyticModel,
    engine: Engine<Ev>,
    nodes: Vec<Node>,
    fleet: Option<Fleet>,
    medium: Medium,
    in_flight: BTreeMap<TxId, InFlight>,
    rng_radio: ChaCha8Rng,
    rng_mac: ChaCha8Rng,
    rng_traffic: ChaCha8Rng,
    rng_scenario: ChaCha8Rng,
    ticking: bool,
    next_frame: u64,
    windows: Vec<WindowStats>,
    pending_window: BTreeMap<VehicleId, bool>,
    reach: BTreeSet<VehicleId>,
    reach_denominator: usize,
    reachability: Vec<f64>,
    elections: Vec<ElectionRecord>,
    collisions: u64,
    emergency: Option<EmergencyRun>,
    trace: Option<Vec<TraceRecord>>,
    airtime: u64,
    sigma: u64,
    difs_slots: u32,
    static_mode: bool,
    forced: Option<EmergencyMessage>,
    horizon: SimTime,
    last_slot: Option<SimTime>,
}

impl World {
    fn blank(cfg: WorldConfig, scheme: SchemeConfig, seed: u64) -> Self {
        let model = cfg.analytic_model();
        let sigma = cfg.mac.sigma_us();
        let difs_slots = (cfg.mac.difs() / cfg.mac.sigma).round() as u32;
        let horizon = cfg.si.si_start(cfg.total_sis());
        World {
            airtime: cfg.mac.airtime_us(),
            trace: cfg.trace.then(Vec::new),
            cfg,
            scheme,
            model,
            engine: Engine::new(),
            nodes: Vec::new(),
            fleet: None,
            medium: Medium::new(),
            in_flight: BTreeMap::new(),
            rng_radio: stream(seed, RNG_RADIO),
            rng_mac: stream(seed, RNG_MAC),
            rng_traffic: stream(seed, RNG_TRAFFIC),
            rng_scenario: stream(seed, RNG_SCENARIO),
            ticking: false,
            next_frame: 0,
            windows: Vec::new(),
            pending_window: BTreeMap::new(),
            reach: BTreeSet::new(),
            reach_denominator: 0,
            reachability: Vec::new(),
            elections: Vec::new(),
            collisions: 0,
            emergency: None,
            sigma,
            difs_slots,
            static_mode: false,
            forced: None,
            horizon,
            last_slot: None,
        }
    }

    /// A full mobile run. Fails only on an invalid grid.
    pub fn new(
        cfg: WorldConfig,
        scheme: SchemeConfig,
        seed: u64,
    ) -> Result<Self, crate::error::MobilityError> {
        let net = build_manhattan_grid(&cfg.grid)?;
        let fleet = Fleet::new(
            net,
            cfg.mobility,
            cfg.mobility_tick,
            stream_seed(seed, RNG_MOBILITY),
        );
        let mut w = World::blank(cfg, scheme, seed);
        w.fleet = Some(fleet);
        Ok(w)
    }

    /// Vehicle ids must be `0..n` in order.
    pub fn from_snapshot(sc: &StaticScenario, scheme: SchemeConfig) -> Self {
        assert!(
            sc.vehicles.iter().enumerate().all(|(i, v)| v.id.0 as usize == i),
            "snapshot vehicle ids must be 0..n in order"
        );
        let cfg = WorldConfig {
            si: sc.si,
            radio: sc.radio,
            mac: sc.mac,
            traffic: sc.traffic,
            analytic: sc.analytic,
            data_lambda: sc.data_lambda,
            warmup_sis: 0,
            measured_sis: 1,
            emergency: true,
            ..WorldConfig::default()
        };
        let mut w = World::blank(cfg, scheme, sc.seed);
        w.static_mode = true;
        let start = w.cfg.si.window(0, Phase::Schi).0;
        w.nodes = sc
            .vehicles
            .iter()
            .map(|v| Node::new(v.id, v.home, v.position, Channel::Sch(v.home), start))
            .collect();
        let everyone: Vec<(VehicleId, Position, Sch)> =
            sc.vehicles.iter().map(|v| (v.id, v.position, v.home)).collect();
        let assignments = sc
            .assignments
            .clone()
            .unwrap_or_else(|| lossless_election(&everyone, scheme.advertised_y));
        for n in &mut w.nodes {
            n.heard = everyone
                .iter()
                .filter(|(id, _, _)| *id != n.id)
                .map(|(id, p, s)| (*id, (*p, *s)))
                .collect();
            n.targets = assignments
                .iter()
                .filter(|a| a.coordinator == n.id)
                .map(|a| (a.to_sch, a.lad))
                .collect();
        }
        w
    }

    fn idx(&self, id: VehicleId) -> usize {
        id.0 as usize
    }

    fn schi_end(&self, now: SimTime) -> SimTime {
        self.cfg.si.si_start(self.cfg.si.si_index(now) + 1)
    }

    fn cchi_end(&self, now: SimTime) -> SimTime {
        self.cfg.si.window(self.cfg.si.si_index(now), Phase::Schi).0
    }

    fn log(&mut self, kind: &'static str, vehicle: Option<VehicleId>, channel: Option<Channel>) {
        let time = self.engine.now();
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord {
                time,
                kind,
                vehicle,
                channel,
            });
        }
    }

    /// Runs every interval and returns the collected metrics.
    pub fn run(mut self) -> RunOutcome {
        self.engine
            .schedule(SimTime::ZERO, Ev::SiStart(0))
            .expect("fresh engine");
        if let Some(fleet) = &self.fleet {
            let spawns: Vec<SimTime> = fleet.spawn_times().to_vec();
            for t in spawns.into_iter().filter(|t| *t < self.horizon) {
                self.engine.schedule(t, Ev::Spawn).expect("future spawn");
            }
            let tick = self.cfg.mobility_tick;
            self.engine
                .schedule(SimTime(tick), Ev::MobilityTick)
                .expect("future tick");
        }
        self.drive();
        self.finish()
    }

    /// Runs a single emergency on a snapshot built by [`World::from_snapshot`].
    pub fn run_emergency(mut self, msg: &EmergencyMessage) -> DisseminationReport {
        self.forced = Some(*msg);
        self.horizon = self.cfg.si.si_start(2);
        let schi = self.cfg.si.window(0, Phase::Schi).0;
        self.engine
            .schedule(schi, Ev::PhaseStart(0, Phase::Schi))
            .expect("fresh engine");
        self.engine
            .schedule(msg.invocation_time.max(schi), Ev::Invoke)
            .expect("fresh engine");
        self.engine
            .schedule(self.cfg.si.si_start(1), Ev::SiStart(1))
            .expect("fresh engine");
        self.drive();
        self.finish().emergency.expect("emergency was invoked")
    }

    fn drive(&mut self) {
        while let Some(ev) = self.engine.pop_until(self.horizon) {
            if ev.kind != Ev::Slot && self.trace.is_some() {
                let (vehicle, channel) = match ev.kind {
                    Ev::SwitchDone(v, _) | Ev::DataArrival(v, _) | Ev::LegacyRelease(v) => {
                        (Some(v), self.nodes[self.idx(v)].tuned)
                    }
                    _ => (None, None),
                };
                self.log(ev.kind.name(), vehicle, channel);
            }
            match ev.kind {
                Ev::SiStart(i) => self.on_si_start(i),
                Ev::PhaseStart(i, Phase::E1) => self.on_e1(i),
                Ev::PhaseStart(i, Phase::E2) => self.on_e2(i),
                Ev::PhaseStart(i, Phase::E3) => self.on_e3(i),
                Ev::PhaseStart(i, _) => self.on_schi(i),
                Ev::MobilityTick => self.on_mobility_tick(),
                Ev::Spawn => self.on_spawn(),
                Ev::Slot => self.on_slot(),
                Ev::TxEnd(id) => self.on_tx_end(id),
                Ev::SwitchDone(v, epoch) => self.on_switch_done(v, epoch),
                Ev::DataArrival(v, si) => self.on_data(v, si),
                Ev::Invoke => self.on_invoke(),
                Ev::LegacyRelease(v) => self.on_legacy_release(v),
            }
            self.ensure_ticking();
        }
    }

    fn ensure_ticking(&mut self) {
        if self.ticking {
            return;
        }
        let now = self.engine.now();
        if self.nodes.iter().any(|n| n.has_work(now)) {
            let mut t = SimTime(now.as_us().div_ceil(self.sigma) * self.sigma);
            if self.last_slot == Some(t) {
                t += self.sigma;
            }
            if t <= self.horizon {
                self.engine
                    .schedule(t, Ev::Slot)
                    .expect("slot boundary is not in the past");
                self.ticking = true;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_frame(
        &mut self,
        idx: usize,
        kind: FrameKind,
        channel: Channel,
        mode: BackoffMode,
        not_before: SimTime,
        deadline: SimTime,
    ) {
        let frame = Frame {
            id: self.next_frame,
            kind,
            channel,
            mode,
            not_before,
            deadline,
        };
        self.next_frame += 1;
        let q = &mut self.nodes[idx].queue;
        if matches!(frame.kind, FrameKind::Emergency { .. }) {
            let at = q
                .iter()
                .position(|f| !matches!(f.kind, FrameKind::Emergency { .. }))
                .unwrap_or(q.len());
            q.insert(at, frame);
        } else {
            q.push_back(frame);
        }
    }

    fn has_room(&self, idx: usize) -> bool {
        self.nodes[idx].optional_frames() < self.cfg.queue_capacity
    }

    fn on_si_start(&mut self, i: u64) {
        let now = self.engine.now();
        let si = self.cfg.si;
        if !self.static_mode {
            if i + 1 < self.cfg.total_sis() {
                self.engine
                    .schedule(si.si_start(i + 1), Ev::SiStart(i + 1))
                    .expect("future interval");
            }
            for phase in [Phase::E1, Phase::E2, Phase::E3, Phase::Schi] {
                self.engine
                    .schedule(si.window(i, phase).0, Ev::PhaseStart(i, phase))
                    .expect("future phase");
            }
        }
        let guard_end = now + si.guard;
        let cchi_end = si.window(i, Phase::Schi).0;
        let msg_id = self.emergency.as_ref().map(|e| e.msg.msg_id);
        for idx in 0..self.nodes.len() {
            let n = &mut self.nodes[idx];
            let unfinished = n.obligation || n.switching.is_some() || !n.plan.is_empty();
            n.queue.retain(|f| f.channel == Channel::Cch);
            n.plan.clear();
            n.switching = None;
            n.obligation = false;
            n.tune(Channel::Cch, now);
            n.heard.clear();
            n.avgs.clear();
            n.cfib = None;
            n.targets.clear();
            n.repeated.clear();
            if let (true, Some(msg_id)) = (unfinished, msg_id) {
                self.push_frame(
                    idx,
                    FrameKind::Emergency {
                        msg_id,
                        hop: Hop::Original,
                    },
                    Channel::Cch,
                    BackoffMode::Standard,
                    guard_end,
                    cchi_end,
                );
            }
        }
    }

    fn on_e1(&mut self, i: u64) {
        let now = self.engine.now();
        let deadline = now + self.cfg.si.e1;
        self.reach.clear();
        self.pending_window.clear();
        self.reach_denominator = self.nodes.len();
        for idx in 0..self.nodes.len() {
            let n = &self.nodes[idx];
            let kind = FrameKind::Beacon {
                si: i,
                e3: false,
                origin: n.id,
                origin_pos: n.pos,
                origin_sch: n.home,
                avgs: BTreeMap::new(),
                stamp: now,
                hop: Hop::Original,
            };
            self.pending_window.insert(n.id, false);
            self.push_frame(idx, kind, Channel::Cch, BackoffMode::Standard, now, deadline);
        }
        self.windows.push(WindowStats {
            si: i,
            e3: false,
            pending: self.nodes.len() as u32,
            ..WindowStats::default()
        });
    }

    /// Charges unsent beacons of the open window with their in-range audience.
    fn close_window(&mut self) {
        let unsent: Vec<VehicleId> = self
            .pending_window
            .iter()
            .filter(|(_, sent)| !**sent)
            .map(|(id, _)| *id)
            .collect();
        let audience: u64 = unsent
            .iter()
            .map(|id| self.audience(*id, Channel::Cch).len() as u64)
            .sum();
        if let Some(w) = self.windows.last_mut() {
            w.in_range += audience;
        }
        self.pending_window.clear();
    }

    fn on_e2(&mut self, _i: u64) {
        self.close_window();
        if self.reach_denominator > 0 {
            let d = self.reach_denominator as f64;
            self.reachability.push(self.reach.len() as f64 / d);
        }
        self.reach.clear();
        for n in &mut self.nodes {
            let peers: Vec<(Position, Sch)> = n.heard.values().copied().collect();
            n.avgs = own_averages(&n.pos, n.home, &peers);
        }
    }

    fn on_e3(&mut self, i: u64) {
        let now = self.engine.now();
        let deadline = now + self.cfg.si.e3;
        for idx in 0..self.nodes.len() {
            let n = &mut self.nodes[idx];
            n.cfib = Some(Cfib::new(n.id, n.home, n.avgs.clone()));
            let kind = FrameKind::Beacon {
                si: i,
                e3: true,
                origin: n.id,
                origin_pos: n.pos,
                origin_sch: n.home,
                avgs: n.avgs.clone(),
                stamp: now,
                hop: Hop::Original,
            };
            let id = n.id;
            self.pending_window.insert(id, false);
            self.push_frame(idx, kind, Channel::Cch, BackoffMode::Standard, now, deadline);
        }
        self.windows.push(WindowStats {
            si: i,
            e3: true,
            pending: self.nodes.len() as u32,
            ..WindowStats::default()
        });
    }

    fn on_schi(&mut self, i: u64) {
        let now = self.engine.now();
        if !self.static_mode {
            self.close_window();
            for n in &mut self.nodes {
                n.targets = n.cfib.as_ref().map(|c| c.self_elected()).unwrap_or_default();
            }
            if i >= self.cfg.warmup_sis && i < self.cfg.warmup_sis + self.cfg.measured_sis {
                let assignments: Vec<CoordinatorAssignment> = self
                    .nodes
                    .iter()
                    .flat_map(|n| {
                        n.targets.iter().map(move |(z, lad)| CoordinatorAssignment {
                            from_sch: n.home,
                            to_sch: *z,
                            coordinator: n.id,
                            lad: *lad,
                        })
                    })
                    .collect();
                self.elections.extend(
                    election_rows(&assignments)
                        .into_iter()
                        .map(|row| ElectionRecord { si: i, row }),
                );
            }
        }
        for n in &mut self.nodes {
            let home = n.home;
            n.tune(Channel::Sch(home), now);
        }
        if self.cfg.data_lambda > 0.0 {
            let gap = Exp::new(self.cfg.data_lambda).expect("positive rate");
            let end = self.schi_end(now);
            for n in &self.nodes {
                let t = now + (gap.sample(&mut self.rng_traffic) * 1e6).round() as u64;
                if t < end {
                    self.engine
                        .schedule(t, Ev::DataArrival(n.id, i))
                        .expect("future arrival");
                }
            }
        }
        if self.cfg.emergency && !self.static_mode && i == self.cfg.emergency_si() {
            let offset = self.rng_scenario.random_range(0..self.cfg.si.schi);
            self.engine
                .schedule(now + offset, Ev::Invoke)
                .expect("future invocation");
        }
    }

    fn sync_positions(&mut self) {
        if let Some(fleet) = &self.fleet {
            for (n, v) in self.nodes.iter_mut().zip(fleet.vehicles()) {
                n.pos = v.position;
            }
        }
    }

    fn on_mobility_tick(&mut self) {
        let now = self.engine.now();
        if let Some(fleet) = self.fleet.as_mut() {
            fleet.advance_to(now);
        }
        self.sync_positions();
        let next = now + self.cfg.mobility_tick;
        if next < self.horizon {
            self.engine.schedule(next, Ev::MobilityTick).expect("future tick");
        }
    }

    fn on_spawn(&mut self) {
        let now = self.engine.now();
        let Some(fleet) = self.fleet.as_mut() else { return };
        fleet.advance_to(now);
        let y = self.scheme.advertised_y;
        while self.nodes.len() < fleet.vehicles().len() {
            let v = &fleet.vehicles()[self.nodes.len()];
            let home = Sch(self.rng_scenario.random_range(1..=y));
            let tuned = if self.cfg.si.in_cchi(now) {
                Channel::Cch
            } else {
                Channel::Sch(home)
            };
            self.nodes.push(Node::new(v.id, home, v.position, tuned, now));
        }
        self.sync_positions();
    }

    /// Vehicles tuned to `channel` within transmission range of `id`.
    fn audience(&self, id: VehicleId, channel: Channel) -> Vec<VehicleId> {
        let me = &self.nodes[self.idx(id)];
        self.nodes
            .iter()
            .filter(|r| {
                r.id != id
                    && r.tuned == Some(channel)
                    && self.cfg.radio.mean_power_at(me.pos.distance(&r.pos)) >= self.cfg.radio.rx_sensitivity
            })
            .map(|r| r.id)
            .collect()
    }

    fn on_slot(&mut self) {
        self.ticking = false;
        let now = self.engine.now();
        self.last_slot = Some(now);
        let earliest_end = now + self.airtime;
        let mut starts = Vec::new();
        let World {
            nodes,
            medium,
            rng_mac,
            cfg,
            difs_slots,
            ..
        } = self;
        for (idx, n) in nodes.iter_mut().enumerate() {
            if n.transmitting {
                continue;
            }
            n.queue.retain(|f| f.deadline >= earliest_end);
            let Some(h) = n.head(now) else { continue };
            let frame = &n.queue[h];
            let fresh = n.contention.as_ref().map(|c| c.frame) != Some(frame.id);
            if fresh {
                n.contention = Some(Contention {
                    frame: frame.id,
                    backoff: draw_backoff(frame.mode, &cfg.mac, rng_mac),
                    difs_left: *difs_slots,
                });
            }
            let channel = frame.channel;
            let busy = medium.busy_at(channel, &n.pos, now, &cfg.radio, Some(n.id));
            let c = n.contention.as_mut().expect("set above");
            if busy {
                c.difs_left = *difs_slots;
                c.backoff = backoff_step(c.backoff, true);
            } else if c.difs_left > 0 {
                c.difs_left -= 1;
            } else {
                c.backoff = backoff_step(c.backoff, false);
                if c.backoff.phase == BackoffPhase::Transmitting {
                    starts.push((idx, h));
                }
            }
        }
        for (idx, h) in starts {
            self.start_tx(idx, h);
        }
    }

    fn start_tx(&mut self, idx: usize, h: usize) {
        let now = self.engine.now();
        let end = now + self.airtime;
        let frame = self.nodes[idx].queue.remove(h).expect("head exists");
        let (id, pos) = (self.nodes[idx].id, self.nodes[idx].pos);
        self.nodes[idx].transmitting = true;
        self.nodes[idx].contention = None;
        let tx = self.medium.begin(id, frame.channel, pos, now, end);
        let in_range = self.audience(id, frame.channel);
        if let (FrameKind::Emergency { .. }, Some(em)) = (&frame.kind, self.emergency.as_mut()) {
            em.transmissions += 1;
        }
        self.log("tx_start", Some(id), Some(frame.channel));
        self.in_flight.insert(
            tx.id,
            InFlight {
                sender: id,
                frame,
                in_range,
            },
        );
        self.engine.schedule(end, Ev::TxEnd(tx.id)).expect("future end");
    }

    fn receivers(&mut self, tx: &Transmission) -> Vec<VehicleId> {
        let mut got = Vec::new();
        for r in &self.nodes {
            if r.id == tx.sender || r.tuned != Some(tx.channel) || r.tuned_since > tx.start {
                continue;
            }
            let busy_self = self
                .medium
                .transmissions()
                .iter()
                .any(|o| o.sender == r.id && o.start < tx.end && tx.start < o.end);
            if busy_self {
                continue;
            }
            if receives(&tx.position, &r.pos, &self.cfg.radio, &mut self.rng_radio) == Reception::Received
                && !self.medium.collided_at(tx, &r.pos, &self.cfg.radio)
            {
                got.push(r.id);
            }
        }
        got
    }

    fn on_tx_end(&mut self, id: TxId) {
        let now = self.engine.now();
        let flight = self.in_flight.remove(&id).expect("transmission in flight");
        let tx = *self.medium.get(id).expect("transmission recorded");
        let sender_idx = self.idx(flight.sender);
        self.nodes[sender_idx].transmitting = false;
        self.log("tx_end", Some(flight.sender), Some(tx.channel));
        let got = self.receivers(&tx);
        let collided = flight.in_range.iter().any(|r| {
            self.medium
                .collided_at(&tx, &self.nodes[self.idx(*r)].pos, &self.cfg.radio)
        });
        if collided {
            self.collisions += 1;
        }
        match flight.frame.kind.clone() {
            FrameKind::Beacon {
                si,
                e3,
                origin,
                origin_pos,
                origin_sch,
                avgs,
                stamp,
                hop,
            } => {
                if hop == Hop::Original {
                    if let Some(sent) = self.pending_window.get_mut(&origin) {
                        *sent = true;
                        if let Some(w) = self.windows.last_mut().filter(|w| w.si == si && w.e3 == e3) {
                            w.sent += 1;
                            w.in_range += flight.in_range.len() as u64;
                            w.received += got.iter().filter(|r| flight.in_range.contains(r)).count() as u64;
                        }
                    }
                }
                for r in got {
                    let ri = self.idx(r);
                    if r == origin {
                        continue;
                    }
                    if e3 {
                        if let Some(cfib) = self.nodes[ri].cfib.as_mut() {
                            cfib.update(&Bsm {
                                sender_id: origin,
                                position: origin_pos,
                                selected_sch: origin_sch,
                                avg_distances: avgs.clone(),
                                timestamp: stamp,
                            });
                        }
                    } else {
                        self.nodes[ri].heard.insert(origin, (origin_pos, origin_sch));
                        self.reach.insert(r);
                    }
                    let repeat = self.scheme.flooding == Flooding::Shbf
                        && hop == Hop::Original
                        && !self.nodes[ri].repeated.contains(&(origin, e3))
                        && self.has_room(ri);
                    if repeat {
                        self.nodes[ri].repeated.insert((origin, e3));
                        let kind = FrameKind::Beacon {
                            si,
                            e3,
                            origin,
                            origin_pos,
                            origin_sch,
                            avgs: avgs.clone(),
                            stamp,
                            hop: Hop::Rebroadcast,
                        };
                        self.push_frame(
                            ri,
                            kind,
                            Channel::Cch,
                            BackoffMode::Standard,
                            now,
                            flight.frame.deadline,
                        );
                    }
                }
            }
            FrameKind::Data => {}
            FrameKind::Emergency { msg_id, hop } => {
                if collided {
                    if let Some(em) = self.emergency.as_mut() {
                        em.collisions += 1;
                    }
                }
                for r in got {
                    self.deliver_emergency(r, msg_id, hop, tx.channel);
                }
                if hop == Hop::Original && matches!(tx.channel, Channel::Sch(_)) {
                    let n = &mut self.nodes[sender_idx];
                    if !n.plan.is_empty() {
                        self.begin_switch(sender_idx);
                    } else {
                        n.obligation = false;
                    }
                }
            }
        }
        self.medium
            .prune(SimTime(now.as_us().saturating_sub(self.airtime)));
    }

    fn deliver_emergency(&mut self, r: VehicleId, msg_id: u64, hop: Hop, channel: Channel) {
        let now = self.engine.now();
        let ri = self.idx(r);
        if self.nodes[ri].has_msg {
            return;
        }
        self.nodes[ri].has_msg = true;
        if let Some(em) = self.emergency.as_mut() {
            em.deliveries.insert(r, now);
        }
        let in_schi = !self.cfg.si.in_cchi(now);
        let origin_sch = self.emergency.as_ref().map(|e| e.msg.origin_sch);
        let n = &mut self.nodes[ri];
        let coordinator =
            self.scheme.scheme == Scheme::Cmd && Some(n.home) == origin_sch && !n.targets.is_empty();
        if coordinator && in_schi && !n.relayed {
            n.relayed = true;
            n.plan = n.targets.iter().map(|(z, _)| *z).collect();
            self.begin_switch(ri);
            return;
        }
        let repeat = self.scheme.flooding == Flooding::Shbf && hop == Hop::Original && !n.repeated_msg;
        if repeat && self.has_room(ri) {
            self.nodes[ri].repeated_msg = true;
            let (mode, deadline) = if in_schi {
                (BackoffMode::Emergency, self.schi_end(now))
            } else {
                (BackoffMode::Standard, self.cchi_end(now))
            };
            self.push_frame(
                ri,
                FrameKind::Emergency {
                    msg_id,
                    hop: Hop::Rebroadcast,
                },
                channel,
                mode,
                now,
                deadline,
            );
        }
    }

    fn begin_switch(&mut self, idx: usize) {
        let now = self.engine.now();
        let n = &mut self.nodes[idx];
        let Some(z) = n.plan.pop_front() else { return };
        n.switching = Some(z);
        n.tuned = None;
        n.contention = None;
        n.obligation = true;
        n.switch_epoch += 1;
        let (id, epoch) = (n.id, n.switch_epoch);
        if let Some(em) = self.emergency.as_mut() {
            em.switches += 1;
        }
        self.engine
            .schedule(now + self.scheme.switching_delay, Ev::SwitchDone(id, epoch))
            .expect("future switch");
    }

    fn on_switch_done(&mut self, v: VehicleId, epoch: u32) {
        let now = self.engine.now();
        let idx = self.idx(v);
        let n = &mut self.nodes[idx];
        if n.switch_epoch != epoch {
            return;
        }
        let Some(z) = n.switching.take() else { return };
        n.tune(Channel::Sch(z), now);
        let msg_id = self.emergency.as_ref().map(|e| e.msg.msg_id).unwrap_or(0);
        let deadline = self.schi_end(now);
        self.push_frame(
            idx,
            FrameKind::Emergency {
                msg_id,
                hop: Hop::Original,
            },
            Channel::Sch(z),
            BackoffMode::Emergency,
            now,
            deadline,
        );
    }

    fn on_data(&mut self, v: VehicleId, si: u64) {
        let now = self.engine.now();
        if self.cfg.si.si_index(now) != si || self.cfg.si.in_cchi(now) {
            return;
        }
        let idx = self.idx(v);
        let end = self.schi_end(now);
        if self.has_room(idx) {
            let home = Channel::Sch(self.nodes[idx].home);
            self.push_frame(idx, FrameKind::Data, home, BackoffMode::Standard, now, end);
        }
        let gap = Exp::new(self.cfg.data_lambda).expect("positive rate");
        let t = now + (gap.sample(&mut self.rng_traffic) * 1e6).round() as u64;
        if t < end {
            self.engine
                .schedule(t, Ev::DataArrival(v, si))
                .expect("future arrival");
        }
    }

    fn on_invoke(&mut self) {
        let now = self.engine.now();
        if self.nodes.is_empty() {
            return;
        }
        let msg = match self.forced {
            Some(m) => EmergencyMessage {
                invocation_time: now,
                ..m
            },
            None => {
                let origin = &self.nodes[self.rng_scenario.random_range(0..self.nodes.len())];
                EmergencyMessage {
                    msg_id: 1,
                    origin_id: origin.id,
                    invocation_time: now,
                    origin_sch: origin.home,
                    payload_size: self.cfg.mac.payload_s as u32,
                }
            }
        };
        let oi = self.idx(msg.origin_id);
        self.emergency = Some(EmergencyRun {
            msg,
            deliveries: BTreeMap::new(),
            switches: 0,
            collisions: 0,
            transmissions: 0,
        });
        self.nodes[oi].has_msg = true;
        self.nodes[oi].relayed = true;
        let home = self.nodes[oi].home;
        match self.scheme.scheme {
            Scheme::Legacy => {
                let at = legacy_wait(now, &self.cfg.si);
                self.engine
                    .schedule(at, Ev::LegacyRelease(msg.origin_id))
                    .expect("future release");
            }
            scheme => {
                let plan: VecDeque<Sch> = if scheme == Scheme::Cmd {
                    self.nodes[oi].targets.iter().map(|(z, _)| *z).collect()
                } else {
                    self.wsd_plan(oi)
                };
                let n = &mut self.nodes[oi];
                n.plan = plan;
                n.obligation = true;
                let deadline = self.schi_end(now);
                self.push_frame(
                    oi,
                    FrameKind::Emergency {
                        msg_id: msg.msg_id,
                        hop: Hop::Original,
                    },
                    Channel::Sch(home),
                    BackoffMode::Emergency,
                    now,
                    deadline,
                );
            }
        }
    }

    /// Populated foreign channels ordered by estimated delay per vehicle.
    fn wsd_plan(&self, oi: usize) -> VecDeque<Sch> {
        let home = self.nodes[oi].home;
        let mut counts: BTreeMap<Sch, u32> = BTreeMap::new();
        for n in self.nodes.iter().filter(|n| n.home != home) {
            *counts.entry(n.home).or_default() += 1;
        }
        let stats: BTreeMap<Sch, (f64, u32)> = counts
            .into_iter()
            .map(|(sch, count)| {
                let model = AnalyticModel {
                    params: AnalyticParams {
                        n_contenders: Some(count),
                        ..self.model.params
                    },
                    ..self.model
                };
                let delay = model
                    .breakdown(Scheme::Wsd, 1)
                    .map(|d| d.e_d)
                    .unwrap_or(f64::INFINITY);
                (sch, (delay, count))
            })
            .collect();
        wsd_schedule(&stats).into_iter().collect()
    }

    fn on_legacy_release(&mut self, v: VehicleId) {
        let now = self.engine.now();
        let idx = self.idx(v);
        let msg_id = self.emergency.as_ref().map(|e| e.msg.msg_id).unwrap_or(0);
        let deadline = self.cchi_end(now);
        self.push_frame(
            idx,
            FrameKind::Emergency {
                msg_id,
                hop: Hop::Original,
            },
            Channel::Cch,
            BackoffMode::Standard,
            now,
            deadline,
        );
    }

    fn finish(self) -> RunOutcome {
        let emergency = self.emergency.as_ref().map(|em| {
            let t0 = em.msg.invocation_time;
            let origin = em.msg.origin_id;
            let others: Vec<&Node> = self.nodes.iter().filter(|n| n.id != origin).collect();
            let populated: BTreeSet<Sch> = others.iter().map(|n| n.home).collect();
            let mut first: BTreeMap<Sch, SimTime> = BTreeMap::new();
            let mut sums: BTreeMap<Sch, (f64, u32)> = BTreeMap::new();
            for n in &others {
                if let Some(t) = em.deliveries.get(&n.id) {
                    let e = first.entry(n.home).or_insert(*t);
                    *e = (*e).min(*t);
                    let s = sums.entry(n.home).or_default();
                    s.0 += (*t - t0) as f64;
                    s.1 += 1;
                }
            }
            let total_delay = first.values().map(|t| (*t - t0) as f64 * 1e-6).reduce(f64::max);
            let delivered = others
                .iter()
                .filter(|n| em.deliveries.contains_key(&n.id))
                .count();
            DisseminationReport {
                message: em.msg,
                per_channel_mean_delay: sums.iter().map(|(k, (s, c))| (*k, s / *c as f64)).collect(),
                per_channel_reached: sums.iter().map(|(k, (_, c))| (*k, *c)).collect(),
                unreached_channels: populated
                    .iter()
                    .filter(|s| !first.contains_key(s))
                    .copied()
                    .collect(),
                per_channel_delivery: first,
                per_vehicle_delivery: others
                    .iter()
                    .map(|n| (n.id, em.deliveries.get(&n.id).copied()))
                    .collect(),
                total_delay,
                switch_count: em.switches,
                collisions: em.collisions,
                transmissions: em.transmissions,
                prr: (!others.is_empty()).then(|| delivered as f64 / others.len() as f64),
            }
        });
        RunOutcome {
            windows: self.windows,
            elections: self.elections,
            reachability: self.reachability,
            collisions: self.collisions,
            emergency,
            trace: self.trace.unwrap_or_default(),
            vehicles: self.nodes.len(),
        }
    }
}

fn stream_seed(seed: u64, n: u64) -> u64 {
    stream(seed, n).random()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radio::TxRangePolicy;

    fn lossless() -> RadioParams {
        RadioParams {
            x_sigma1: 0.0,
            x_sigma2: 0.0,
            tx_range_policy: TxRangePolicy::Deterministic,
            ..RadioParams::default()
        }
    }

    fn reach(p: &RadioParams) -> f64 {
        let (mut lo, mut hi) = (1.0, 5000.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if p.mean_power_at(mid) >= p.rx_sensitivity {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn snapshot(spots: &[(f64, f64, u8)]) -> StaticScenario {
        let vehicles = spots
            .iter()
            .enumerate()
            .map(|(i, (x, y, s))| StaticVehicle {
                id: VehicleId(i as u32),
                position: Position::new(*x, *y),
                home: Sch(*s),
            })
            .collect();
        StaticScenario {
            radio: lossless(),
            ..StaticScenario::new(vehicles, 7)
        }
    }

    fn emergency(sc: &StaticScenario, origin: u32) -> EmergencyMessage {
        EmergencyMessage {
            msg_id: 1,
            origin_id: VehicleId(origin),
            invocation_time: sc.si.window(0, Phase::Schi).0 + 1_000,
            origin_sch: sc.vehicles[origin as usize].home,
            payload_size: 200,
        }
    }

    fn scheme(scheme: Scheme, y: u8, flooding: Flooding) -> SchemeConfig {
        SchemeConfig {
            scheme,
            advertised_y: y,
            flooding,
            ..SchemeConfig::default()
        }
    }

    fn cluster3() -> StaticScenario {
        snapshot(&[
            (0.0, 0.0, 1),
            (10.0, 0.0, 1),
            (-10.0, 0.0, 1),
            (40.0, 0.0, 2),
            (45.0, 0.0, 2),
            (-40.0, 0.0, 3),
            (-45.0, 0.0, 3),
        ])
    }

    #[test]
    fn cmd_coordinators_switch_once_each() {
        let sc = cluster3();
        let rep = run_world(&sc, scheme(Scheme::Cmd, 3, Flooding::None), 0);
        assert_eq!(rep.switch_count, 2);
        assert!(rep.unreached_channels.is_empty());
        assert_eq!(rep.prr, Some(1.0));
    }

    fn run_world(sc: &StaticScenario, cfg: SchemeConfig, origin: u32) -> DisseminationReport {
        World::from_snapshot(sc, cfg).run_emergency(&emergency(sc, origin))
    }

    #[test]
    fn wsd_relayer_visits_every_foreign_channel() {
        let sc = cluster3();
        let rep = run_world(&sc, scheme(Scheme::Wsd, 3, Flooding::None), 0);
        assert_eq!(rep.switch_count, 2);
        assert!(rep.unreached_channels.is_empty());
        let cmd = run_world(&sc, scheme(Scheme::Cmd, 3, Flooding::None), 0);
        assert!(cmd.total_delay.unwrap() < rep.total_delay.unwrap());
    }

    #[test]
    fn single_channel_is_one_broadcast() {
        let sc = snapshot(&[(0.0, 0.0, 1), (20.0, 0.0, 1), (0.0, 30.0, 1)]);
        let cmd = run_world(&sc, scheme(Scheme::Cmd, 1, Flooding::None), 0);
        let wsd = run_world(&sc, scheme(Scheme::Wsd, 1, Flooding::None), 0);
        assert_eq!(cmd.transmissions, 1);
        assert_eq!(cmd.switch_count, 0);
        assert_eq!(cmd.total_delay, wsd.total_delay);
    }

    #[test]
    fn flooding_repeats_once_per_receiver() {
        let sc = snapshot(&[
            (0.0, 0.0, 1),
            (5.0, 0.0, 1),
            (0.0, 5.0, 1),
            (5.0, 5.0, 1),
            (2.0, 2.0, 1),
        ]);
        let rep = run_world(&sc, scheme(Scheme::Cmd, 1, Flooding::Shbf), 0);
        assert_eq!(rep.transmissions, 5);
        assert_eq!(rep.prr, Some(1.0));
    }

    #[test]
    fn flooding_bridges_a_chain() {
        let d = 0.9 * reach(&lossless());
        let sc = snapshot(&[(0.0, 0.0, 1), (d, 0.0, 1), (2.0 * d, 0.0, 1)]);
        let plain = run_world(&sc, scheme(Scheme::Cmd, 1, Flooding::None), 0);
        assert_eq!(plain.per_vehicle_delivery[&VehicleId(2)], None);
        let shbf = run_world(&sc, scheme(Scheme::Cmd, 1, Flooding::Shbf), 0);
        let via_b = shbf.per_vehicle_delivery[&VehicleId(2)].unwrap();
        assert!(via_b > shbf.per_vehicle_delivery[&VehicleId(1)].unwrap());
    }

    #[test]
    fn missed_coordinator_leaves_its_channel_unreached() {
        let d = reach(&lossless());
        // The coordinator toward SCH 2 sits beyond the origin's reach.
        let sc = snapshot(&[
            (0.0, 0.0, 1),
            (10.0, 0.0, 1),
            (1.2 * d, 0.0, 1),
            (1.3 * d, 0.0, 2),
        ]);
        let rep = run_world(&sc, scheme(Scheme::Cmd, 2, Flooding::None), 0);
        assert_eq!(rep.switch_count, 0);
        assert_eq!(rep.unreached_channels, vec![Sch(2)]);
        assert!(rep.per_channel_delivery.contains_key(&Sch(1)));
    }

    #[test]
    fn legacy_waits_for_the_next_cchi() {
        let sc = cluster3();
        let rep = run_world(&sc, scheme(Scheme::Legacy, 3, Flooding::None), 0);
        let release = sc.si.si_start(1) + sc.si.guard;
        assert_eq!(rep.switch_count, 0);
        assert!(rep.per_channel_delivery.values().all(|t| *t > release));
        assert!(rep.unreached_channels.is_empty());
    }

    fn small_config() -> WorldConfig {
        WorldConfig {
            warmup_sis: 1,
            measured_sis: 3,
            mobility: MobilityConfig {
                vehicle_count: 20,
                ..MobilityConfig::default()
            },
            ..WorldConfig::default()
        }
    }

    #[test]
    fn full_run_is_reproducible() {
        let a = World::new(small_config(), SchemeConfig::default(), 3)
            .unwrap()
            .run();
        let b = World::new(small_config(), SchemeConfig::default(), 3)
            .unwrap()
            .run();
        assert_eq!(a, b);
        assert_eq!(a.windows.len(), 2 * 5);
        let populated = a.windows.iter().filter(|w| !w.e3 && w.pending > 0).count();
        assert_eq!(a.reachability.len(), populated);
        assert!(a.emergency.is_some());
        assert!(a.windows.iter().all(|w| w.sent <= w.pending));
    }

    #[test]
    fn trace_skips_slot_ticks() {
        let cfg = WorldConfig {
            trace: true,
            ..small_config()
        };
        let out = World::new(cfg, SchemeConfig::default(), 1).unwrap().run();
        assert!(out.trace.iter().any(|r| r.kind == "tx_start"));
        assert!(out.trace.iter().all(|r| r.kind != "slot"));
        assert!(out.trace.windows(2).all(|w| w[0].time <= w[1].time));
    }
}
