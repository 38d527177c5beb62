//! CSMA/CA contention: back-off chains, timing constants and medium bookkeeping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::radio::RadioParams;
use crate::sim::SimTime;
use crate::types::{Channel, Position, VehicleId};

/// Size of the smallest frame on air, used for the default EIFS.
const MINIMAL_FRAME_BYTES: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacParams {
    pub cw_min: u32,
    /// Accepted for completeness; broadcast frames never grow the window.
    pub cw_max: u32,
    /// Slot time, us.
    pub sigma: f64,
    /// us
    pub sifs: f64,
    pub aifsn: u32,
    /// Overrides the derived EIFS when set, us.
    pub eifs: Option<f64>,
    /// bits/s
    pub data_rate: f64,
    /// bytes
    pub payload_s: f64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            cw_min: 15,
            cw_max: 256,
            sigma: 16.0,
            sifs: 32.0,
            aifsn: 2,
            eifs: None,
            data_rate: 3.0e6,
            payload_s: 200.0,
        }
    }
}

impl MacParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.cw_min > self.cw_max {
            return Err(ConfigError::invariant(
                &["mac.cw_min", "mac.cw_max"],
                format!("cw_min {} exceeds cw_max {}", self.cw_min, self.cw_max),
            ));
        }
        if !(self.sigma > 0.0) {
            return Err(ConfigError::invariant(&["mac.sigma"], "slot time must be > 0"));
        }
        if !(self.data_rate > 0.0) {
            return Err(ConfigError::invariant(&["mac.data_rate"], "must be > 0"));
        }
        if !(self.payload_s >= 0.0) || !(self.sifs >= 0.0) {
            return Err(ConfigError::invariant(
                &["mac.payload_s", "mac.sifs"],
                "must be >= 0",
            ));
        }
        Ok(())
    }

    /// W0: the number of equiprobable initial counters.
    pub fn w0(&self) -> u32 {
        self.cw_min + 1
    }

    pub fn difs(&self) -> f64 {
        self.sifs + self.aifsn as f64 * self.sigma
    }

    pub fn eifs(&self) -> f64 {
        self.eifs
            .unwrap_or_else(|| self.sifs + self.difs() + 8.0 * MINIMAL_FRAME_BYTES / self.data_rate * 1e6)
    }

    /// Airtime of one frame in whole microseconds, rounded up.
    pub fn airtime_us(&self) -> u64 {
        frame_airtime(self).ceil() as u64
    }

    pub fn sigma_us(&self) -> u64 {
        self.sigma.round().max(1.0) as u64
    }
}

/// Airtime of one payload, us.
pub fn frame_airtime(p: &MacParams) -> f64 {
    8.0 * p.payload_s / p.data_rate * 1e6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackoffMode {
    Standard,
    Emergency,
}

impl BackoffMode {
    fn decrement(self) -> u32 {
        match self {
            BackoffMode::Standard => 1,
            BackoffMode::Emergency => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackoffPhase {
    Idle,
    CountingDown,
    Transmitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackoffState {
    pub mode: BackoffMode,
    pub counter_k: u32,
    pub w0: u32,
    pub phase: BackoffPhase,
    pub frozen: bool,
}

impl BackoffState {
    pub fn idle(mode: BackoffMode, w0: u32) -> Self {
        BackoffState {
            mode,
            counter_k: 0,
            w0,
            phase: BackoffPhase::Idle,
            frozen: false,
        }
    }
}

pub fn draw_backoff<R: Rng>(mode: BackoffMode, params: &MacParams, rng: &mut R) -> BackoffState {
    draw_with_window(mode, params.w0(), rng)
}

fn draw_with_window<R: Rng>(mode: BackoffMode, w0: u32, rng: &mut R) -> BackoffState {
    BackoffState {
        mode,
        counter_k: rng.random_range(0..w0.max(1)),
        w0,
        phase: BackoffPhase::CountingDown,
        frozen: false,
    }
}

/// One slot of the chain selected by `s.mode`.
///
/// A busy slot freezes the counter. An idle slot at counter 0 starts the
/// transmission; otherwise the counter drops by one (standard) or two
/// (emergency, floored at zero).
pub fn backoff_step(s: BackoffState, channel_busy: bool) -> BackoffState {
    if s.phase != BackoffPhase::CountingDown {
        return s;
    }
    if channel_busy {
        return BackoffState { frozen: true, ..s };
    }
    if s.counter_k == 0 {
        return BackoffState {
            phase: BackoffPhase::Transmitting,
            frozen: false,
            ..s
        };
    }
    BackoffState {
        counter_k: s.counter_k.saturating_sub(s.mode.decrement()),
        frozen: false,
        ..s
    }
}

pub fn standard_backoff_step(s: BackoffState, channel_busy: bool) -> BackoffState {
    debug_assert_eq!(s.mode, BackoffMode::Standard);
    backoff_step(s, channel_busy)
}

pub fn emergency_backoff_step(s: BackoffState, channel_busy: bool) -> BackoffState {
    debug_assert_eq!(s.mode, BackoffMode::Emergency);
    backoff_step(s, channel_busy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentionParams {
    /// N
    pub n_contenders: u32,
    pub p_b: f64,
    pub p_a: f64,
    pub rho: f64,
}

impl ContentionParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in [
            ("contention.p_b", self.p_b),
            ("contention.p_a", self.p_a),
            ("contention.rho", self.rho),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::invariant(
                    &[key],
                    format!("{v} is not a probability"),
                ));
            }
        }
        Ok(())
    }
}

/// Slot counts from a single simulated back-off instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceStats {
    pub slots: u64,
    /// Slots in which the instance transmitted.
    pub transmissions: u64,
    pub idle_slots: u64,
    /// Slots spent at each counter value (frozen or not).
    pub counter_slots: Vec<u64>,
}

impl InstanceStats {
    pub fn transmission_fraction(&self) -> f64 {
        self.transmissions as f64 / self.slots as f64
    }
}

/// Runs one contention instance against a channel that is busy with
/// probability `p_b` in every slot, independently.
///
/// Idle nodes get a frame with probability `p_a` per slot; after a
/// transmission another frame is waiting with probability `rho`.
pub fn simulate_backoff_instance<R: Rng>(
    mode: BackoffMode,
    w0: u32,
    c: &ContentionParams,
    slots: u64,
    rng: &mut R,
) -> InstanceStats {
    let mut stats = InstanceStats {
        slots,
        transmissions: 0,
        idle_slots: 0,
        counter_slots: vec![0; w0.max(1) as usize],
    };
    let mut s = BackoffState::idle(mode, w0);
    for _ in 0..slots {
        match s.phase {
            BackoffPhase::Idle => {
                stats.idle_slots += 1;
                if rng.random::<f64>() < c.p_a {
                    s = draw_with_window(mode, w0, rng);
                }
            }
            BackoffPhase::CountingDown => {
                stats.counter_slots[s.counter_k as usize] += 1;
                let busy = rng.random::<f64>() < c.p_b;
                s = backoff_step(s, busy);
                if s.phase == BackoffPhase::Transmitting {
                    stats.transmissions += 1;
                    s = if rng.random::<f64>() < c.rho {
                        draw_with_window(mode, w0, rng)
                    } else {
                        BackoffState::idle(mode, w0)
                    };
                }
            }
            BackoffPhase::Transmitting => unreachable!("transmissions resolve within the slot"),
        }
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub id: TxId,
    pub sender: VehicleId,
    pub channel: Channel,
    pub position: Position,
    pub start: SimTime,
    pub end: SimTime,
}

impl Transmission {
    pub fn overlaps(&self, other: &Transmission) -> bool {
        self.channel == other.channel && self.start < other.end && other.start < self.end
    }

    pub fn overlaps_window(&self, from: SimTime, to: SimTime) -> bool {
        self.start < to && from < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelActivity {
    Idle,
    Success(TxId),
    Collision(Vec<TxId>),
    /// Several transmissions with no receiver hearing more than one of them.
    SpatialReuse(Vec<TxId>),
}

/// Classifies one channel over `[from, to)`.
///
/// Two transmissions conflict when they overlap in time and some receiver
/// lies within carrier-sense range of both senders.
pub fn channel_activity(
    txs: &[Transmission],
    channel: Channel,
    from: SimTime,
    to: SimTime,
    receivers: &[Position],
    cs_range: f64,
) -> ChannelActivity {
    let active: Vec<&Transmission> = txs
        .iter()
        .filter(|t| t.channel == channel && t.overlaps_window(from, to))
        .collect();
    match active.as_slice() {
        [] => ChannelActivity::Idle,
        [only] => ChannelActivity::Success(only.id),
        _ => {
            let mut lost = Vec::new();
            for (i, a) in active.iter().enumerate() {
                let conflicted = active.iter().enumerate().any(|(j, b)| {
                    i != j
                        && a.overlaps(b)
                        && receivers.iter().any(|r| {
                            r.distance(&a.position) <= cs_range && r.distance(&b.position) <= cs_range
                        })
                });
                if conflicted {
                    lost.push(a.id);
                }
            }
            if lost.is_empty() {
                ChannelActivity::SpatialReuse(active.iter().map(|t| t.id).collect())
            } else {
                ChannelActivity::Collision(lost)
            }
        }
    }
}

/// Transmissions on the air, indexed by channel, for carrier sense and
/// receiver-side collision checks.
#[derive(Debug, Clone, Default)]
pub struct Medium {
    txs: Vec<Transmission>,
    next_id: u64,
}

impl Medium {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn begin(
        &mut self,
        sender: VehicleId,
        channel: Channel,
        position: Position,
        start: SimTime,
        end: SimTime,
    ) -> Transmission {
        let tx = Transmission {
            id: TxId(self.next_id),
            sender,
            channel,
            position,
            start,
            end,
        };
        self.next_id += 1;
        self.txs.push(tx);
        tx
    }

    pub fn get(&self, id: TxId) -> Option<&Transmission> {
        self.txs.iter().find(|t| t.id == id)
    }

    pub fn transmissions(&self) -> &[Transmission] {
        &self.txs
    }

    /// Whether a node at `at` senses energy on `channel` at time `t`.
    pub fn busy_at(
        &self,
        channel: Channel,
        at: &Position,
        t: SimTime,
        radio: &RadioParams,
        except: Option<VehicleId>,
    ) -> bool {
        self.txs.iter().any(|tx| {
            tx.channel == channel
                && tx.start <= t
                && t < tx.end
                && Some(tx.sender) != except
                && radio.senses(tx.position.distance(at))
        })
    }

    /// Whether `tx` is corrupted at `rx` by another overlapping transmission
    /// the receiver can sense.
    pub fn collided_at(&self, tx: &Transmission, rx: &Position, radio: &RadioParams) -> bool {
        self.txs
            .iter()
            .any(|o| o.id != tx.id && o.overlaps(tx) && radio.senses(o.position.distance(rx)))
    }

    /// Drops transmissions that ended before `t`.
    pub fn prune(&mut self, t: SimTime) {
        self.txs.retain(|tx| tx.end >= t);
    }
}
