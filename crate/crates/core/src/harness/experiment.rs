use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepPoint};
use crate::coordination::ElectionRow;
use crate::error::AnalyticsError;
use crate::scenario::{RunOutcome, TraceRecord, WindowStats, World};
use crate::types::{Sch, Scheme};

/// One simulated (seed, sweep point) pair with its analytical counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub seed: u64,
    pub point: usize,
    pub sweep: SweepPoint,
    pub invocation_us: Option<u64>,
    pub total_delay_us: Option<f64>,
    pub analytic_e_d_us: Option<f64>,
    pub analytic_t_d_us: Option<f64>,
    pub prr: Option<f64>,
    pub ptr: Option<f64>,
    pub emergency_prr: Option<f64>,
    pub switch_count: Option<u32>,
    pub unreached_channels: Vec<Sch>,
    pub collisions: Option<u64>,
    /// First delivery per SCH relative to the invocation, us.
    pub per_channel_delay_us: BTreeMap<Sch, f64>,
    /// Mean per-vehicle delivery delay per SCH, us, with the vehicle count.
    pub per_channel_mean_delay_us: BTreeMap<Sch, (f64, u32)>,
    pub reachability: Vec<f64>,
    pub error: Option<String>,
}

impl MetricsRow {
    fn empty(seed: u64, point: usize, sweep: SweepPoint) -> Self {
        MetricsRow {
            seed,
            point,
            sweep,
            invocation_us: None,
            total_delay_us: None,
            analytic_e_d_us: None,
            analytic_t_d_us: None,
            prr: None,
            ptr: None,
            emergency_prr: None,
            switch_count: None,
            unreached_channels: Vec::new(),
            collisions: None,
            per_channel_delay_us: BTreeMap::new(),
            per_channel_mean_delay_us: BTreeMap::new(),
            reachability: Vec::new(),
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectionLine {
    pub seed: u64,
    pub point: usize,
    pub si: u64,
    pub row: ElectionRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub seed: u64,
    pub point: usize,
    pub record: TraceRecord,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub elections: Vec<ElectionLine>,
    pub traces: Vec<TraceLine>,
}

impl MetricsTable {
    /// True when there was work and every row failed.
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.error.is_some())
    }
}

/// Received over in-range; `None` when nobody was in range.
pub fn compute_prr(received: u64, in_range: u64) -> Option<f64> {
    (in_range > 0).then(|| received as f64 / in_range as f64)
}

/// Vehicles that got a beacon out over vehicles that had one pending.
pub fn compute_ptr(sent: u64, pending: u64) -> Option<f64> {
    (pending > 0).then(|| sent as f64 / pending as f64)
}

/// Empirical CDF as (value, cumulative fraction) steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cdf {
    pub steps: Vec<(f64, f64)>,
}

impl Cdf {
    /// Fraction of samples at or below `x`.
    pub fn at(&self, x: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|(v, _)| *v <= x)
            .last()
            .map_or(0.0, |(_, f)| *f)
    }
}

pub fn reachability_cdf(samples: &[f64]) -> Cdf {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut steps: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match steps.last_mut() {
            Some(last) if last.0 == *v => last.1 = f,
            _ => steps.push((*v, f)),
        }
    }
    Cdf { steps }
}

fn measured<'a>(
    cfg: &crate::scenario::WorldConfig,
    windows: &'a [WindowStats],
) -> impl Iterator<Item = &'a WindowStats> {
    let (lo, hi) = (cfg.warmup_sis, cfg.warmup_sis + cfg.measured_sis);
    windows.iter().filter(move |w| !w.e3 && w.si >= lo && w.si < hi)
}

/// Runs one sweep point for one seed.
pub fn run_point(
    cfg: &ExperimentConfig,
    seed: u64,
    point: usize,
    sweep: SweepPoint,
) -> (MetricsRow, RunOutcome) {
    let mut row = MetricsRow::empty(seed, point, sweep);
    let world_cfg = cfg.world_for(&sweep);
    match cfg.model_for(&sweep).breakdown(sweep.scheme, sweep.y) {
        Ok(b) => {
            row.analytic_e_d_us = Some(b.e_d * 1e6);
            row.analytic_t_d_us = Some(b.t_d * 1e6);
        }
        Err(e) => row.error = Some(format!("analytics: {e}")),
    }
    let world = match World::new(world_cfg.clone(), cfg.scheme_for(&sweep), seed) {
        Ok(w) => w,
        Err(e) => {
            row.error = Some(format!("scenario: {e}"));
            return (row, RunOutcome::default());
        }
    };
    let out = world.run();
    let (mut sent, mut pending, mut received, mut in_range) = (0u64, 0u64, 0u64, 0u64);
    for w in measured(&world_cfg, &out.windows) {
        sent += u64::from(w.sent);
        pending += u64::from(w.pending);
        received += w.received;
        in_range += w.in_range;
    }
    row.prr = compute_prr(received, in_range);
    row.ptr = compute_ptr(sent, pending);
    row.collisions = Some(out.collisions);
    row.reachability = out.reachability.clone();
    if let Some(em) = &out.emergency {
        let t0 = em.message.invocation_time;
        row.invocation_us = Some(t0.as_us());
        row.total_delay_us = em.total_delay.map(|d| d * 1e6);
        row.emergency_prr = em.prr;
        row.switch_count = Some(em.switch_count);
        row.unreached_channels = em.unreached_channels.clone();
        row.per_channel_delay_us = em
            .per_channel_delivery
            .iter()
            .map(|(k, t)| (*k, (*t - t0) as f64))
            .collect();
        row.per_channel_mean_delay_us = em
            .per_channel_mean_delay
            .iter()
            .map(|(k, d)| (*k, (*d, em.per_channel_reached[k])))
            .collect();
    }
    (row, out)
}

/// Every (seed, point) pair, run in parallel and sorted by (seed, point).
pub fn run_experiment(cfg: &ExperimentConfig) -> MetricsTable {
    let points = cfg.points();
    let jobs: Vec<(u64, usize)> = cfg
        .seeds
        .iter()
        .flat_map(|s| (0..points.len()).map(move |p| (*s, p)))
        .collect();
    let mut results: Vec<(MetricsRow, Vec<ElectionLine>, Vec<TraceLine>)> = jobs
        .par_iter()
        .map(|&(seed, p)| {
            let (row, out) = run_point(cfg, seed, p, points[p]);
            let elections = out
                .elections
                .into_iter()
                .map(|e| ElectionLine {
                    seed,
                    point: p,
                    si: e.si,
                    row: e.row,
                })
                .collect();
            let traces = out
                .trace
                .into_iter()
                .map(|record| TraceLine {
                    seed,
                    point: p,
                    record,
                })
                .collect();
            (row, elections, traces)
        })
        .collect();
    results.sort_by_key(|(r, _, _)| (r.seed, r.point));
    let mut table = MetricsTable::default();
    for (row, elections, traces) in results {
        table.rows.push(row);
        table.elections.extend(elections);
        table.traces.extend(traces);
    }
    table
}

/// Closed-form delay components for the overlay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticalRow {
    pub y: u8,
    pub scheme: Scheme,
    /// s
    pub e_q: f64,
    pub e_c: f64,
    pub e_t: f64,
    pub e_d: f64,
    pub t_d: f64,
}

/// One row per (scheme, y) of the sweep, at the configured e1.
pub fn analytical_rows(cfg: &ExperimentConfig) -> Result<Vec<AnalyticalRow>, AnalyticsError> {
    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::new();
    for p in cfg.points() {
        if !seen.insert((p.scheme, p.y)) {
            continue;
        }
        let b = cfg
            .model_for(&SweepPoint { e1: cfg.si.e1, ..p })
            .breakdown(p.scheme, p.y)?;
        rows.push(AnalyticalRow {
            y: p.y,
            scheme: p.scheme,
            e_q: b.e_q,
            e_c: b.e_c,
            e_t: b.e_t,
            e_d: b.e_d,
            t_d: b.t_d,
        });
    }
    rows.sort_by_key(|r| (r.y, r.scheme));
    Ok(rows)
}
