//! Closed-form delay model: back-off chain, slot timing, M/M/1/B queueing
//! and scheme-level dissemination delay.
//!
//! All durations are in seconds.

use serde::{Deserialize, Serialize};

use crate::error::AnalyticsError;
use crate::mac::{frame_airtime, ContentionParams, MacParams};
use crate::radio::{
    carrier_sense_range_detail, vehicles_in_cs_range, Branch, BranchSelection, RadioParams, TrafficParams,
};
use crate::sim::SyncIntervalConfig;
use crate::types::Scheme;

/// Below this distance from 1 the queue formulas switch to their limits.
const RHO_ONE_BAND: f64 = 1e-6;

fn check_probability(name: &'static str, v: f64) -> Result<(), AnalyticsError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(AnalyticsError::domain(name, v, "[0, 1]"))
    }
}

/// Stationary occupancy of the back-off chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    /// Normalising constant of the chain, equal to the per-slot
    /// transmission probability.
    pub b0: f64,
    /// Occupancy of counter states 0..W0.
    pub backoff: Vec<f64>,
    /// Occupancy of the idle (empty queue) state.
    pub idle: f64,
}

impl StationaryDistribution {
    pub fn total(&self) -> f64 {
        self.backoff.iter().sum::<f64>() + self.idle
    }
}

fn idle_weight(p_a: f64, rho: f64) -> Result<f64, AnalyticsError> {
    if rho >= 1.0 {
        return Ok(0.0);
    }
    if p_a <= 0.0 {
        return Err(AnalyticsError::domain("p_a", p_a, "(0, 1] when rho < 1"));
    }
    Ok((1.0 - rho) / p_a)
}

fn check_chain(w0: u32, p_b: f64, p_a: f64, rho: f64) -> Result<(), AnalyticsError> {
    if w0 == 0 {
        return Err(AnalyticsError::domain("w0", 0.0, ">= 1"));
    }
    check_probability("p_b", p_b)?;
    check_probability("p_a", p_a)?;
    check_probability("rho", rho)?;
    if p_b >= 1.0 {
        return Err(AnalyticsError::ChainNeverAdvances);
    }
    Ok(())
}

pub fn stationary_distribution(
    w0: u32,
    p_b: f64,
    p_a: f64,
    rho: f64,
) -> Result<StationaryDistribution, AnalyticsError> {
    let b0 = transmission_probability(w0, p_b, p_a, rho)?;
    let w = w0 as f64;
    let backoff = (0..w0).map(|k| (w - k as f64) / (w * (1.0 - p_b)) * b0).collect();
    let idle = idle_weight(p_a, rho)? * b0;
    Ok(StationaryDistribution { b0, backoff, idle })
}

pub fn transmission_probability(w0: u32, p_b: f64, p_a: f64, rho: f64) -> Result<f64, AnalyticsError> {
    check_chain(w0, p_b, p_a, rho)?;
    let w = w0 as f64;
    Ok(1.0 / ((w + 1.0) / (2.0 * (1.0 - p_b)) + idle_weight(p_a, rho)?))
}

/// Transmission probability of the emergency chain, whose counter drops by two
/// per idle slot. A start at counter j visits 1 + ceil(j/2) states.
pub fn emergency_transmission_probability(
    w0: u32,
    p_b: f64,
    p_a: f64,
    rho: f64,
) -> Result<f64, AnalyticsError> {
    check_chain(w0, p_b, p_a, rho)?;
    let w = w0 as f64;
    let visits: u64 = (1..w0 as u64).map(|j| j.div_ceil(2)).sum();
    Ok(1.0 / ((w + visits as f64) / (w * (1.0 - p_b)) + idle_weight(p_a, rho)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotProbabilities {
    pub p_idle: f64,
    pub p_busy: f64,
    pub p_success: f64,
    pub p_coll: f64,
}

pub fn slot_probabilities(tau: f64, n: u32) -> SlotProbabilities {
    let n_f = n as f64;
    let p_idle = (1.0 - tau).powi(n as i32);
    let p_success = if n == 0 {
        0.0
    } else {
        n_f * tau * (1.0 - tau).powi(n as i32 - 1)
    };
    SlotProbabilities {
        p_idle,
        p_busy: 1.0 - p_idle,
        p_success,
        p_coll: (1.0 - p_idle - p_success).max(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotDurations {
    pub t_slot: f64,
    pub t_success: f64,
    pub t_coll: f64,
}

pub fn slot_duration(p: &SlotProbabilities, sigma: f64, e_t: f64, difs: f64, eifs: f64) -> SlotDurations {
    let t_success = difs + sigma + e_t;
    let t_coll = eifs + sigma + e_t;
    SlotDurations {
        t_slot: (1.0 - p.p_busy) * sigma + t_success * p.p_success + t_coll * p.p_coll,
        t_success,
        t_coll,
    }
}

pub fn expected_contention_delay(cw_min: u32, t_slot: f64) -> f64 {
    cw_min.saturating_sub(1) as f64 / 2.0 * t_slot
}

/// Mean number of packets in an M/M/1/B system.
pub fn expected_queue_length(rho: f64, b: u32) -> f64 {
    let bf = b as f64;
    if (rho - 1.0).abs() < RHO_ONE_BAND {
        return bf / 2.0;
    }
    let rb = rho.powi(b as i32);
    rho / (1.0 - rho * rb) * ((1.0 - rb) / (1.0 - rho) - bf * rb)
}

/// Probability that an arrival finds the M/M/1/B system full.
pub fn blocking_probability(rho: f64, b: u32) -> f64 {
    if (rho - 1.0).abs() < RHO_ONE_BAND {
        return 1.0 / (b as f64 + 1.0);
    }
    (1.0 - rho) * rho.powi(b as i32) / (1.0 - rho.powi(b as i32 + 1))
}

/// Mean time in an M/M/1/B system for an accepted packet.
pub fn queueing_delay(lambda: f64, mu: f64, b: u32) -> Result<f64, AnalyticsError> {
    if !(lambda > 0.0) {
        return Err(AnalyticsError::domain("lambda", lambda, "> 0"));
    }
    if !(mu > 0.0) {
        return Err(AnalyticsError::domain("mu", mu, "> 0"));
    }
    if b == 0 {
        return Err(AnalyticsError::domain("b_capacity", 0.0, ">= 1"));
    }
    let rho = lambda / mu;
    let bf = b as f64;
    if (rho - 1.0).abs() < RHO_ONE_BAND {
        return Ok((bf + 1.0) / (2.0 * mu));
    }
    let rb = rho.powi(b as i32);
    Ok(1.0 / (mu - lambda) - bf * rb / (mu * (1.0 - rb)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueParams {
    /// 1/s
    pub lambda: f64,
    /// 1/s
    pub mu: f64,
    pub b_capacity: u32,
}

impl QueueParams {
    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }
}

/// V: the coordination window long enough for every vehicle in
/// carrier-sense range to get one slot.
pub fn optimal_decision_interval(
    traffic: &TrafficParams,
    radio: &RadioParams,
    t_slot: f64,
) -> Result<f64, AnalyticsError> {
    let l_cs = carrier_sense_range_detail(radio)?.meters;
    Ok(vehicles_in_cs_range(traffic, l_cs) * t_slot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayBreakdown {
    pub e_q: f64,
    pub e_c: f64,
    pub e_t: f64,
    pub e_d: f64,
    pub t_slot: f64,
    pub t_success: f64,
    pub t_coll: f64,
    pub p_idle: f64,
    pub p_busy: f64,
    pub p_success: f64,
    pub p_coll: f64,
    pub tau: f64,
    pub v_interval: f64,
    pub t_d: f64,
    pub t_sw: f64,
    pub y: u8,
}

/// E[d] and its constituents. `v_interval`, `t_d`, `t_sw` and `y` are left at
/// zero for the caller to fill in.
pub fn end_to_end_delay(
    queue: &QueueParams,
    mac: &MacParams,
    contention: &ContentionParams,
) -> Result<DelayBreakdown, AnalyticsError> {
    let tau = transmission_probability(mac.w0(), contention.p_b, contention.p_a, contention.rho)?;
    let probs = slot_probabilities(tau, contention.n_contenders);
    let e_t = frame_airtime(mac) * 1e-6;
    let slots = slot_duration(
        &probs,
        mac.sigma * 1e-6,
        e_t,
        mac.difs() * 1e-6,
        mac.eifs() * 1e-6,
    );
    let e_c = expected_contention_delay(mac.cw_min, slots.t_slot);
    let e_q = queueing_delay(queue.lambda, queue.mu, queue.b_capacity)?;
    Ok(DelayBreakdown {
        e_q,
        e_c,
        e_t,
        e_d: e_q + e_c + e_t,
        t_slot: slots.t_slot,
        t_success: slots.t_success,
        t_coll: slots.t_coll,
        p_idle: probs.p_idle,
        p_busy: probs.p_busy,
        p_success: probs.p_success,
        p_coll: probs.p_coll,
        tau,
        v_interval: 0.0,
        t_d: 0.0,
        t_sw: 0.0,
        y: 0,
    })
}

/// Expected time from an SCHI invocation to the start of the next CCHI
/// transmission opportunity for the legacy scheme.
pub fn expected_legacy_wait(si: &SyncIntervalConfig) -> f64 {
    (si.schi as f64 / 2.0 + si.guard as f64) * 1e-6
}

pub fn total_dissemination_delay(scheme: Scheme, y: u8, e_d: f64, t_sw: f64, si: &SyncIntervalConfig) -> f64 {
    let yf = y as f64;
    match scheme {
        Scheme::Cmd if y > 1 => 2.0 * e_d + t_sw,
        Scheme::Wsd if y > 1 => yf * e_d + (yf - 1.0) * t_sw,
        Scheme::Cmd | Scheme::Wsd => e_d,
        Scheme::Legacy => expected_legacy_wait(si) + e_d,
    }
}

/// Solves p_b = 1 - (1 - tau(p_b))^(n-1) by bisection.
pub fn blocking_fixed_point(w0: u32, p_a: f64, rho: f64, n: u32) -> Result<f64, AnalyticsError> {
    if n <= 1 {
        return Ok(0.0);
    }
    let f = |p_b: f64| -> Result<f64, AnalyticsError> {
        let tau = transmission_probability(w0, p_b, p_a, rho)?;
        Ok(p_b - (1.0 - (1.0 - tau).powi(n as i32 - 1)))
    };
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if f(lo)? >= 0.0 {
        return Ok(lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inputs for a full analytical evaluation beyond the radio and MAC settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticParams {
    /// Per-vehicle packet arrival rate, 1/s.
    pub lambda: f64,
    /// Service rate, 1/s. Defaults to the reciprocal of the frame airtime.
    pub mu: Option<f64>,
    /// Queue capacity B. Defaults to round(2 beta L_cs), at least 1.
    pub queue_capacity: Option<u32>,
    /// Contender count N. Defaults to round(2 beta L_cs).
    pub n_contenders: Option<u32>,
    /// Back-off blocking probability. Defaults to the fixed point in N.
    pub p_b: Option<f64>,
    /// Channel switching delay, s.
    pub t_sw: f64,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        AnalyticParams {
            lambda: 10.0,
            mu: None,
            queue_capacity: None,
            n_contenders: None,
            p_b: None,
            t_sw: 2e-3,
        }
    }
}

/// Everything needed to evaluate the analytical model for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticModel {
    pub radio: RadioParams,
    pub traffic: TrafficParams,
    pub mac: MacParams,
    pub params: AnalyticParams,
    pub si: SyncIntervalConfig,
}

impl AnalyticModel {
    /// B = 2 beta L_cs, unrounded.
    pub fn vehicles_in_range(&self) -> Result<f64, AnalyticsError> {
        let l_cs = carrier_sense_range_detail(&self.radio)?.meters;
        Ok(vehicles_in_cs_range(&self.traffic, l_cs))
    }

    pub fn n_contenders(&self) -> Result<u32, AnalyticsError> {
        match self.params.n_contenders {
            Some(n) => Ok(n),
            None => Ok(self.vehicles_in_range()?.round() as u32),
        }
    }

    pub fn queue(&self) -> Result<QueueParams, AnalyticsError> {
        let mu = self
            .params
            .mu
            .unwrap_or_else(|| 1.0 / (frame_airtime(&self.mac) * 1e-6));
        let b_capacity = match self.params.queue_capacity {
            Some(b) => b,
            None => (self.vehicles_in_range()?.round() as u32).max(1),
        };
        Ok(QueueParams {
            lambda: self.params.lambda,
            mu,
            b_capacity,
        })
    }

    /// Contention parameters; `saturated` forces rho = 1.
    pub fn contention(&self, saturated: bool) -> Result<ContentionParams, AnalyticsError> {
        let q = self.queue()?;
        let rho = if saturated { 1.0 } else { q.rho().min(1.0) };
        let p_a = 1.0 - (-q.lambda * self.mac.sigma * 1e-6).exp();
        let n = self.n_contenders()?;
        let p_b = match self.params.p_b {
            Some(p) => p,
            None => blocking_fixed_point(self.mac.w0(), p_a, rho, n)?,
        };
        Ok(ContentionParams {
            n_contenders: n,
            p_b,
            p_a,
            rho,
        })
    }

    /// V computed from the saturated slot duration.
    pub fn decision_interval(&self) -> Result<f64, AnalyticsError> {
        let sat = end_to_end_delay(&self.queue()?, &self.mac, &self.contention(true)?)?;
        optimal_decision_interval(&self.traffic, &self.radio, sat.t_slot)
    }

    pub fn breakdown(&self, scheme: Scheme, y: u8) -> Result<DelayBreakdown, AnalyticsError> {
        let mut d = end_to_end_delay(&self.queue()?, &self.mac, &self.contention(false)?)?;
        d.v_interval = self.decision_interval()?;
        d.t_sw = self.params.t_sw;
        d.y = y;
        d.t_d = total_dissemination_delay(scheme, y, d.e_d, d.t_sw, &self.si);
        Ok(d)
    }
}

/// V under one carrier-sense branch policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalReport {
    pub policy: &'static str,
    pub branch: Branch,
    pub l_cs: f64,
    pub b: f64,
    pub t_slot: f64,
    pub v: f64,
}

/// V under the standard dual-slope reading and under the literal printed
/// exponent, both with auto branch selection.
pub fn decision_interval_report(model: &AnalyticModel) -> Result<Vec<IntervalReport>, AnalyticsError> {
    let policies = [("dual-slope", false), ("literal", true)];
    policies
        .into_iter()
        .map(|(policy, literal)| {
            let radio = RadioParams {
                literal_far_exponent: literal,
                branch: BranchSelection::Auto,
                ..model.radio
            };
            let m = AnalyticModel { radio, ..*model };
            let cs = carrier_sense_range_detail(&radio)?;
            let sat = end_to_end_delay(&m.queue()?, &m.mac, &m.contention(true)?)?;
            let b = vehicles_in_cs_range(&m.traffic, cs.meters);
            Ok(IntervalReport {
                policy,
                branch: cs.branch,
                l_cs: cs.meters,
                b,
                t_slot: sat.t_slot,
                v: b * sat.t_slot,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_chain() {
        let d = stationary_distribution(1, 0.0, 0.5, 1.0).unwrap();
        assert_eq!(d.b0, 1.0);
        assert_eq!(d.backoff, vec![1.0]);
        assert_eq!(d.idle, 0.0);
    }

    #[test]
    fn tau_examples() {
        assert_relative_eq!(transmission_probability(15, 0.0, 0.5, 1.0).unwrap(), 0.125);
        assert_relative_eq!(transmission_probability(15, 0.5, 0.5, 1.0).unwrap(), 0.0625);
        assert_relative_eq!(transmission_probability(15, 0.0, 1.0, 0.0).unwrap(), 1.0 / 9.0);
        let d = stationary_distribution(15, 0.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(d.b0, 0.125);
    }

    #[test]
    fn distribution_sums_to_one() {
        for w0 in [1, 4, 16, 33] {
            for p_b in [0.0, 0.4, 0.9] {
                for rho in [0.0, 0.5, 1.0] {
                    let d = stationary_distribution(w0, p_b, 0.3, rho).unwrap();
                    assert!((d.total() - 1.0).abs() < 1e-12);
                    assert_eq!(d.b0, transmission_probability(w0, p_b, 0.3, rho).unwrap());
                }
            }
        }
    }

    #[test]
    fn chain_rejects_bad_inputs() {
        assert_eq!(
            transmission_probability(16, 1.0, 0.5, 0.5),
            Err(AnalyticsError::ChainNeverAdvances)
        );
        assert!(matches!(
            transmission_probability(16, 0.1, 0.0, 0.5),
            Err(AnalyticsError::Domain { .. })
        ));
        assert!(matches!(
            transmission_probability(0, 0.1, 0.5, 0.5),
            Err(AnalyticsError::Domain { .. })
        ));
        assert!(matches!(
            transmission_probability(16, 1.5, 0.5, 0.5),
            Err(AnalyticsError::Domain { .. })
        ));
    }

    #[test]
    fn emergency_chain_transmits_more_often() {
        for w0 in [3, 8, 16] {
            let std = transmission_probability(w0, 0.3, 0.2, 0.7).unwrap();
            let em = emergency_transmission_probability(w0, 0.3, 0.2, 0.7).unwrap();
            assert!(em > std);
        }
        // With one or two states both chains coincide.
        assert_eq!(
            transmission_probability(1, 0.3, 0.2, 0.7).unwrap(),
            emergency_transmission_probability(1, 0.3, 0.2, 0.7).unwrap()
        );
    }

    #[test]
    fn slot_probability_examples() {
        let p = slot_probabilities(0.5, 1);
        assert_eq!((p.p_idle, p.p_busy, p.p_success, p.p_coll), (0.5, 0.5, 0.5, 0.0));
        let p = slot_probabilities(0.1, 2);
        assert_relative_eq!(p.p_idle, 0.81, epsilon = 1e-12);
        assert_relative_eq!(p.p_busy, 0.19, epsilon = 1e-12);
        assert_relative_eq!(p.p_success, 0.18, epsilon = 1e-12);
        assert_relative_eq!(p.p_coll, 0.01, epsilon = 1e-12);
        let p = slot_probabilities(0.0, 7);
        assert_eq!((p.p_idle, p.p_busy, p.p_success, p.p_coll), (1.0, 0.0, 0.0, 0.0));
        for n in 1..40 {
            for i in 0..=20 {
                let p = slot_probabilities(i as f64 / 20.0, n);
                assert!((p.p_idle + p.p_success + p.p_coll - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slot_duration_examples() {
        let idle = slot_probabilities(0.0, 5);
        assert_eq!(slot_duration(&idle, 16.0, 533.0, 64.0, 100.0).t_slot, 16.0);
        let certain = SlotProbabilities {
            p_idle: 0.0,
            p_busy: 1.0,
            p_success: 1.0,
            p_coll: 0.0,
        };
        assert_eq!(
            slot_duration(&certain, 16.0, 533.0, 64.0, 100.0).t_slot,
            64.0 + 16.0 + 533.0
        );

        let mac = MacParams::default();
        let e_t = 1600.0 / 3.0;
        let eifs = mac.eifs();
        let p = slot_probabilities(0.1, 2);
        let got = slot_duration(&p, 16.0, e_t, mac.difs(), eifs);
        let hand = 0.81 * 16.0 + (64.0 + 16.0 + e_t) * 0.18 + (eifs + 16.0 + e_t) * 0.01;
        assert_relative_eq!(got.t_slot, hand, epsilon = 1e-9);
        assert_relative_eq!(got.t_success, 613.0 + 1.0 / 3.0, epsilon = 1e-9);
    }

    #[test]
    fn contention_delay_examples() {
        assert_eq!(expected_contention_delay(1, 1e-4), 0.0);
        assert_relative_eq!(expected_contention_delay(15, 100e-6), 700e-6, epsilon = 1e-15);
        assert_relative_eq!(
            expected_contention_delay(15, 200e-6),
            2.0 * expected_contention_delay(15, 100e-6)
        );
    }

    fn birth_death_mean(rho: f64, b: u32) -> f64 {
        let weights: Vec<f64> = (0..=b).map(|n| rho.powi(n as i32)).collect();
        let z: f64 = weights.iter().sum();
        weights.iter().enumerate().map(|(n, w)| n as f64 * w / z).sum()
    }

    #[test]
    fn queue_length_examples() {
        assert_eq!(expected_queue_length(0.0, 5), 0.0);
        assert_relative_eq!(expected_queue_length(0.5, 1), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(expected_queue_length(0.5, 2), 1.0 / 1.75, epsilon = 1e-12);
        for b in [1, 2, 5, 20] {
            for rho in [0.1, 0.5, 0.9, 1.0, 1.7] {
                assert_relative_eq!(
                    expected_queue_length(rho, b),
                    birth_death_mean(rho, b),
                    epsilon = 1e-9
                );
            }
        }
    }

    #[test]
    fn queueing_delay_examples() {
        assert_relative_eq!(queueing_delay(1.0, 1.0, 1).unwrap(), 1.0);
        assert_relative_eq!(queueing_delay(0.5, 1.0, 2).unwrap(), 4.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(blocking_probability(0.5, 2), 1.0 / 7.0, epsilon = 1e-12);
        // Little's law form.
        for (lambda, b) in [(0.5, 2), (0.3, 5), (0.9, 20), (1.4, 3)] {
            let little =
                expected_queue_length(lambda, b) / (lambda * (1.0 - blocking_probability(lambda, b)));
            assert_relative_eq!(queueing_delay(lambda, 1.0, b).unwrap(), little, epsilon = 1e-9);
        }
        let large = queueing_delay(0.1, 1.0, 50).unwrap();
        assert_relative_eq!(large, 1.0 / 0.9, epsilon = 1e-9);
        assert!(queueing_delay(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn decision_interval_examples() {
        let radio = RadioParams::default();
        assert_eq!(
            optimal_decision_interval(&TrafficParams { beta: 0.0 }, &radio, 410e-6).unwrap(),
            0.0
        );
        let literal = RadioParams {
            literal_far_exponent: true,
            ..radio
        };
        let v = optimal_decision_interval(&TrafficParams::default(), &literal, 410e-6).unwrap();
        assert!((v - 8.37e-3).abs() < 0.02e-3, "{v}");
    }

    #[test]
    fn dissemination_delay_examples() {
        let si = SyncIntervalConfig::default();
        for s in [Scheme::Cmd, Scheme::Wsd] {
            assert_relative_eq!(total_dissemination_delay(s, 1, 2e-3, 2e-3, &si), 2e-3);
        }
        assert_relative_eq!(total_dissemination_delay(Scheme::Cmd, 3, 2e-3, 2e-3, &si), 6e-3);
        assert_relative_eq!(total_dissemination_delay(Scheme::Wsd, 3, 2e-3, 2e-3, &si), 10e-3);
        assert_relative_eq!(
            total_dissemination_delay(Scheme::Legacy, 3, 2e-3, 2e-3, &si),
            25e-3 + 4e-3 + 2e-3
        );
        for y in 3..=6u8 {
            let gap = total_dissemination_delay(Scheme::Wsd, y, 1.3e-3, 2e-3, &si)
                - total_dissemination_delay(Scheme::Cmd, y, 1.3e-3, 2e-3, &si);
            assert_relative_eq!(gap, (y as f64 - 2.0) * (1.3e-3 + 2e-3), epsilon = 1e-15);
        }
    }

    fn model() -> AnalyticModel {
        AnalyticModel {
            radio: RadioParams::default(),
            traffic: TrafficParams::default(),
            mac: MacParams::default(),
            params: AnalyticParams::default(),
            si: SyncIntervalConfig::default(),
        }
    }

    #[test]
    fn full_pipeline_is_low_milliseconds() {
        let m = AnalyticModel {
            params: AnalyticParams {
                n_contenders: Some(10),
                ..AnalyticParams::default()
            },
            ..model()
        };
        let d = m.breakdown(Scheme::Cmd, 3).unwrap();
        assert!(d.e_d > 1e-3 && d.e_d < 5e-3, "{d:?}");
        assert_relative_eq!(d.e_d, d.e_q + d.e_c + d.e_t);
        assert_relative_eq!(d.e_t, 1600.0 / 3.0 * 1e-6, epsilon = 1e-12);
    }

    #[test]
    fn delay_grows_with_cw_min() {
        let mut last = 0.0;
        for cw_min in [1, 3, 7, 15, 31, 63] {
            let m = AnalyticModel {
                mac: MacParams {
                    cw_min,
                    ..MacParams::default()
                },
                params: AnalyticParams {
                    n_contenders: Some(10),
                    p_b: Some(0.2),
                    ..AnalyticParams::default()
                },
                ..model()
            };
            let e_d = m.breakdown(Scheme::Cmd, 1).unwrap().e_d;
            assert!(e_d >= last);
            last = e_d;
        }
    }

    #[test]
    fn fixed_point_is_consistent() {
        let p_b = blocking_fixed_point(16, 1.0, 1.0, 20).unwrap();
        let tau = transmission_probability(16, p_b, 1.0, 1.0).unwrap();
        assert!((p_b - (1.0 - (1.0 - tau).powi(19))).abs() < 1e-9);
        assert_eq!(blocking_fixed_point(16, 1.0, 1.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn interval_report_covers_both_policies() {
        let r = decision_interval_report(&model()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].branch, Branch::Far);
        assert!(r[1].l_cs > r[0].l_cs);
        assert!(r.iter().all(|x| x.v > 0.0));
    }
}
