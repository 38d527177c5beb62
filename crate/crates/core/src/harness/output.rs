use std::fs::File;
use std::path::{Path, PathBuf};

use super::experiment::{AnalyticalRow, ElectionLine, MetricsRow, MetricsTable, TraceLine};
use crate::error::OutputError;

/// Decimal rendering with six significant digits and no trailing zeros.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let mut s = if mag > 5 {
        let scale = 10f64.powi(mag - 5);
        format!("{:.0}", (x / scale).round() * scale)
    } else {
        format!("{:.*}", (5 - mag) as usize, x)
    };
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

fn opt_int<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

struct Sheet {
    path: PathBuf,
    w: csv::Writer<File>,
}

impl Sheet {
    fn create(path: &Path, header: &[&str]) -> Result<Self, OutputError> {
        let file = File::create(path).map_err(|source| OutputError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut sheet = Sheet {
            path: path.to_path_buf(),
            w: csv::Writer::from_writer(file),
        };
        sheet.row(header.iter().map(|h| h.to_string()))?;
        Ok(sheet)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<(), OutputError> {
        let fields: Vec<String> = fields.into_iter().collect();
        self.w.write_record(&fields).map_err(|source| OutputError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<(), OutputError> {
        self.w.flush().map_err(|source| OutputError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

fn channel_list(row: &MetricsRow) -> String {
    row.unreached_channels
        .iter()
        .map(|s| s.0.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// metrics.csv: one line per (seed, sweep point).
pub fn emit_csv(rows: &[MetricsRow], path: &Path) -> Result<(), OutputError> {
    let mut sheet = Sheet::create(
        path,
        &[
            "seed",
            "point",
            "scheme",
            "y",
            "flooding",
            "e1_us",
            "invocation_us",
            "total_delay_us",
            "analytic_e_d_us",
            "analytic_t_d_us",
            "prr",
            "ptr",
            "emergency_prr",
            "switch_count",
            "unreached_channels",
            "collisions",
            "per_channel_delay_us",
            "error",
        ],
    )?;
    for r in rows {
        let per_channel = r
            .per_channel_delay_us
            .iter()
            .map(|(k, d)| format!("{}:{}", k.0, sig6(*d)))
            .collect::<Vec<_>>()
            .join(";");
        sheet.row([
            r.seed.to_string(),
            r.point.to_string(),
            r.sweep.scheme.name().to_string(),
            r.sweep.y.to_string(),
            r.sweep.flooding.name().to_string(),
            r.sweep.e1.to_string(),
            opt_int(r.invocation_us),
            opt(r.total_delay_us),
            opt(r.analytic_e_d_us),
            opt(r.analytic_t_d_us),
            opt(r.prr),
            opt(r.ptr),
            opt(r.emergency_prr),
            opt_int(r.switch_count),
            channel_list(r),
            opt_int(r.collisions),
            per_channel,
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    sheet.finish()
}

/// reports.csv: the emergency outcome of each row.
pub fn emit_reports(rows: &[MetricsRow], path: &Path) -> Result<(), OutputError> {
    let mut sheet = Sheet::create(
        path,
        &[
            "seed",
            "scheme",
            "y",
            "flooding",
            "total_delay_us",
            "prr",
            "switch_count",
            "unreached_channels",
        ],
    )?;
    for r in rows.iter().filter(|r| r.invocation_us.is_some()) {
        sheet.row([
            r.seed.to_string(),
            r.sweep.scheme.name().to_string(),
            r.sweep.y.to_string(),
            r.sweep.flooding.name().to_string(),
            opt(r.total_delay_us),
            opt(r.emergency_prr),
            opt_int(r.switch_count),
            channel_list(r),
        ])?;
    }
    sheet.finish()
}

pub fn emit_elections(lines: &[ElectionLine], path: &Path) -> Result<(), OutputError> {
    let mut sheet = Sheet::create(
        path,
        &[
            "seed",
            "point",
            "si",
            "cluster_k",
            "target_z",
            "coordinator_id",
            "lad_m",
            "duplicates_count",
        ],
    )?;
    for l in lines {
        sheet.row([
            l.seed.to_string(),
            l.point.to_string(),
            l.si.to_string(),
            l.row.cluster_k.0.to_string(),
            l.row.target_z.0.to_string(),
            l.row.coordinator_id.0.to_string(),
            sig6(l.row.lad_m),
            l.row.duplicates_count.to_string(),
        ])?;
    }
    sheet.finish()
}

/// analytical.csv, times in us.
pub fn emit_analytical(rows: &[AnalyticalRow], path: &Path) -> Result<(), OutputError> {
    let mut sheet = Sheet::create(path, &["y", "scheme", "e_q", "e_c", "e_t", "e_d", "t_d"])?;
    for r in rows {
        sheet.row([
            r.y.to_string(),
            r.scheme.name().to_string(),
            sig6(r.e_q * 1e6),
            sig6(r.e_c * 1e6),
            sig6(r.e_t * 1e6),
            sig6(r.e_d * 1e6),
            sig6(r.t_d * 1e6),
        ])?;
    }
    sheet.finish()
}

pub fn emit_trace(lines: &[TraceLine], path: &Path) -> Result<(), OutputError> {
    let mut sheet = Sheet::create(path, &["seed", "point", "time_us", "kind", "vehicle", "channel"])?;
    for l in lines {
        sheet.row([
            l.seed.to_string(),
            l.point.to_string(),
            l.record.time.as_us().to_string(),
            l.record.kind.to_string(),
            opt_int(l.record.vehicle.map(|v| v.0)),
            opt_int(l.record.channel.map(|c| c.id())),
        ])?;
    }
    sheet.finish()
}

/// Writes every CSV of an experiment into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    table: &MetricsTable,
    analytical: &[AnalyticalRow],
    trace: bool,
) -> Result<(), OutputError> {
    std::fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    emit_csv(&table.rows, &dir.join("metrics.csv"))?;
    emit_reports(&table.rows, &dir.join("reports.csv"))?;
    emit_elections(&table.elections, &dir.join("elections.csv"))?;
    emit_analytical(analytical, &dir.join("analytical.csv"))?;
    if trace {
        emit_trace(&table.traces, &dir.join("trace.csv"))?;
    }
    Ok(())
}
