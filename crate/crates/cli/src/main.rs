//! `cmdsim`: run simulations, sweeps and the closed-form model from the shell.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmd_vanet::analytics::decision_interval_report;
use cmd_vanet::dissemination::Flooding;
use cmd_vanet::harness::{
    analytical_rows, emit_analytical, load_config, run_experiment, sig6, write_outputs, ExperimentConfig,
    Sweep,
};
use cmd_vanet::{ConfigError, Scheme, SiPreset};

#[derive(Parser)]
#[command(
    name = "cmdsim",
    version,
    about = "Multi-channel emergency dissemination simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run per seed at a single sweep point.
    Simulate(Opts),
    /// Closed-form delay model only.
    Analyze(Opts),
    /// Every seed across every sweep point of the config.
    Sweep(Opts),
    /// Load and check a config, then exit.
    ValidateConfig(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// Number of advertised service channels.
    #[arg(long)]
    channels: Option<u8>,
    #[arg(long, value_parser = parse_flooding)]
    flooding: Option<Flooding>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write trace.csv.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<SiPreset>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| format!("expected cmd, wsd or legacy, got {s:?}"))
}

fn parse_flooding(s: &str) -> Result<Flooding, String> {
    Flooding::parse(s).ok_or_else(|| format!("expected none or shbf, got {s:?}"))
}

fn parse_preset(s: &str) -> Result<SiPreset, String> {
    SiPreset::parse(s).ok_or_else(|| format!("expected paper-literal or std-50, got {s:?}"))
}

impl Opts {
    fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.preset {
            cfg = cfg.with_preset(p);
        }
        if let Some(s) = self.scheme {
            cfg.scheme.scheme = s;
            cfg.sweep.schemes.clear();
        }
        if let Some(y) = self.channels {
            cfg.scheme.advertised_y = y;
            cfg.sweep.y.clear();
        }
        if let Some(f) = self.flooding {
            cfg.scheme.flooding = f;
            cfg.sweep.flooding.clear();
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.trace |= self.trace;
        cfg.validate()?;
        Ok(cfg)
    }
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(CONFIG_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (opts, run): (&Opts, fn(ExperimentConfig) -> ExitCode) = match &cli.command {
        Command::Simulate(o) => (o, |mut cfg| {
            cfg.sweep = Sweep::default();
            experiment(cfg)
        }),
        Command::Sweep(o) => (o, experiment),
        Command::Analyze(o) => (o, analyze),
        Command::ValidateConfig(o) => (o, |cfg| {
            println!(
                "config ok: {} seed(s), {} sweep point(s), preset {}",
                cfg.seeds.len(),
                cfg.points().len(),
                cfg.preset.name()
            );
            ExitCode::SUCCESS
        }),
    };
    match opts.resolve() {
        Ok(cfg) => run(cfg),
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
    }
}

fn experiment(cfg: ExperimentConfig) -> ExitCode {
    let analytical = match analytical_rows(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("analytics failed: {e}");
            Vec::new()
        }
    };
    let table = run_experiment(&cfg);
    for r in &table.rows {
        match &r.error {
            Some(e) => eprintln!("seed {} point {}: {e}", r.seed, r.point),
            None => println!(
                "seed {} {} y={} {}: total_delay_us={} prr={} ptr={} switches={}",
                r.seed,
                r.sweep.scheme,
                r.sweep.y,
                r.sweep.flooding.name(),
                r.total_delay_us.map(sig6).unwrap_or_else(|| "-".into()),
                r.prr.map(sig6).unwrap_or_else(|| "-".into()),
                r.ptr.map(sig6).unwrap_or_else(|| "-".into()),
                r.switch_count.map_or("-".into(), |s| s.to_string()),
            ),
        }
    }
    if let Err(e) = write_outputs(&cfg.output_dir, &table, &analytical, cfg.trace) {
        eprintln!("output failed: {e}");
        return ExitCode::from(RUNTIME_ERROR);
    }
    if table.all_failed() {
        eprintln!("every sweep point failed");
        return ExitCode::from(RUNTIME_ERROR);
    }
    println!("wrote {}", cfg.output_dir.display());
    ExitCode::SUCCESS
}

fn analyze(cfg: ExperimentConfig) -> ExitCode {
    let rows = match analytical_rows(&cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("analytics failed: {e}");
            return ExitCode::from(RUNTIME_ERROR);
        }
    };
    println!("y  scheme  e_q_us  e_c_us  e_t_us  e_d_us  t_d_us");
    for r in &rows {
        println!(
            "{}  {}  {}  {}  {}  {}  {}",
            r.y,
            r.scheme,
            sig6(r.e_q * 1e6),
            sig6(r.e_c * 1e6),
            sig6(r.e_t * 1e6),
            sig6(r.e_d * 1e6),
            sig6(r.t_d * 1e6)
        );
    }
    let points = cfg.points();
    match decision_interval_report(&cfg.model_for(&points[0])) {
        Ok(reports) => {
            for v in reports {
                println!(
                    "decision interval ({}): L_cs {} m, B {}, T_slot {} us, V {} us",
                    v.policy,
                    sig6(v.l_cs),
                    sig6(v.b),
                    sig6(v.t_slot * 1e6),
                    sig6(v.v * 1e6)
                );
            }
        }
        Err(e) => eprintln!("decision interval unavailable: {e}"),
    }
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| e.to_string())
        .and_then(|_| {
            emit_analytical(&rows, &cfg.output_dir.join("analytical.csv")).map_err(|e| e.to_string())
        })
    {
        eprintln!("output failed: {e}");
        return ExitCode::from(RUNTIME_ERROR);
    }
    ExitCode::SUCCESS
}
