//! Experiment orchestration, metrics and CSV export.

mod config;
mod experiment;
mod output;

pub use config::{load_config, parse_config, ExperimentConfig, Sweep, SweepPoint};
pub use experiment::{
    analytical_rows, compute_prr, compute_ptr, reachability_cdf, run_experiment, run_point, AnalyticalRow,
    Cdf, ElectionLine, MetricsRow, MetricsTable, TraceLine,
};
pub use output::{emit_analytical, emit_csv, emit_elections, emit_reports, emit_trace, sig6, write_outputs};
