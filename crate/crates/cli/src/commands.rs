//! Subcommand bodies. Each returns the files it wrote.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use collapse_core::bullet::bullet_report_on;
use collapse_core::collapse::{run_trajectory, write_events_jsonl, TrajectoryConfig};
use collapse_core::energy::{audit_at_first_peak, write_sweep_csv, SweepConfig, SweepRow};
use collapse_core::entanglement::{unitary_trace, EntanglementProbe, EntanglementTrace};
use collapse_core::experiment::{critical_sweep, revival_protocol, write_critical_csv, CriticalRow, RevivalConfig};
use collapse_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, OutputFormat, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Numerical(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownModel(_)
            | Error::InvalidModel(_)
            | Error::NonHermitian(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            Error::Io(e) => CliError::Io(e.to_string()),
            Error::Csv(e) => CliError::Io(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

type CmdResult = Result<Vec<PathBuf>, CliError>;

fn comments(config: &RunConfig, what: &str) -> Vec<String> {
    vec![format!("config_hash={}", config.hash()), what.to_string()]
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.to_string()))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// JSON counterpart of a CSV file: the comment lines become fields.
#[derive(Serialize)]
struct JsonDoc<'a, T: Serialize> {
    config_hash: String,
    description: &'a str,
    rows: T,
}

fn write_table<T: Serialize>(
    config: &RunConfig,
    stem: &str,
    what: &str,
    rows: T,
    csv: impl FnOnce(&mut BufWriter<File>, &[String]) -> collapse_core::Result<()>,
) -> Result<PathBuf, CliError> {
    let path = config.out.join(format!("{stem}.{}", config.format.extension()));
    match config.format {
        OutputFormat::Csv => {
            let mut out = create(&path)?;
            csv(&mut out, &comments(config, what))?;
        }
        OutputFormat::Json => write_json(&path, &JsonDoc { config_hash: config.hash(), description: what, rows })?,
    }
    Ok(path)
}

fn write_trace(config: &RunConfig, stem: &str, trace: &EntanglementTrace) -> Result<PathBuf, CliError> {
    let what = format!("model={} N={} unit={}", config.model_tag(), trace.n, config.entropy_unit.name());
    let scale = config.entropy_unit.scale();
    let rows: Vec<_> = trace
        .samples()
        .iter()
        .map(|s| [s.t, s.epsilon * scale, s.epsilon_dot * scale, s.epsilon_ddot * scale])
        .collect();
    write_table(config, stem, &what, rows, |out, c| trace.write_csv(out, c, config.entropy_unit))
}

#[derive(Serialize)]
struct PeakRow {
    n: usize,
    peak_epsilon_dot: f64,
    t_of_peak: f64,
}

pub fn trace(config: &RunConfig) -> CmdResult {
    let models = config.models()?;
    let results: Vec<(PathBuf, PeakRow)> = models
        .par_iter()
        .map(|(n, h)| {
            let initial = config.initial_state.prepare(*n, config.seed)?;
            let trace = unitary_trace(&EntanglementProbe::new(h), &initial, config.model_tag(), config.t_max, config.dt)?;
            let path = write_trace(config, &format!("trace_N{n}"), &trace)?;
            let peak = trace.peak_speed().expect("trace has at least one sample");
            Ok((path, PeakRow { n: *n, peak_epsilon_dot: peak.epsilon_dot, t_of_peak: peak.t }))
        })
        .collect::<Result<_, CliError>>()?;
    let (mut files, peaks): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    if peaks.len() > 1 {
        let what = format!("model={} peak entangling speed per N", config.model_tag());
        let scale = config.entropy_unit.scale();
        let peaks: Vec<_> = peaks.into_iter().map(|p| PeakRow { peak_epsilon_dot: p.peak_epsilon_dot * scale, ..p }).collect();
        files.push(write_table(config, "trace_summary", &what, &peaks, |out, c| {
            for line in c {
                writeln!(out, "# {line}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["N", "peak_epsilon_dot", "t_of_peak"])?;
            for p in &peaks {
                w.write_record([p.n.to_string(), p.peak_epsilon_dot.to_string(), p.t_of_peak.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?);
    }
    Ok(files)
}

pub fn energy_sweep(config: &RunConfig) -> CmdResult {
    let sweep = SweepConfig { method: config.basis_method, grid: config.scan_grid(), dt: config.dt, t_max: config.t_max };
    let rows: Vec<SweepRow> = config
        .models()?
        .par_iter()
        .map(|(n, h)| audit_at_first_peak(h, &config.initial_state.prepare(*n, config.seed)?, &sweep))
        .collect::<Result<_, Error>>()?;
    let what = format!("model={} energy audit at the first entangling-speed peak", config.model_tag());
    Ok(vec![write_table(config, "energy_sweep", &what, &rows, |out, c| write_sweep_csv(out, c, &rows))?])
}

pub fn trajectory(config: &RunConfig) -> CmdResult {
    let policy = config.policy()?;
    let files: Vec<Vec<PathBuf>> = config
        .models()?
        .par_iter()
        .map(|(n, h)| {
            let initial = config.initial_state.prepare(*n, config.seed)?;
            let mut tc = TrajectoryConfig::new(policy, config.t_max, config.seed);
            tc.method = config.basis_method;
            tc.grid = config.scan_grid();
            let run = run_trajectory(&initial, h, config.model_tag(), &tc)?;
            for s in &run.skipped {
                eprintln!("N={n}: no collapse at t={}: {}", s.t, s.reason);
            }
            let events = config.out.join(format!("events_N{n}.jsonl"));
            write_events_jsonl(create(&events)?, &run.events)?;
            let trace = write_trace(config, &format!("trajectory_N{n}"), &run.trace)?;
            Ok(vec![events, trace])
        })
        .collect::<Result<_, CliError>>()?;
    Ok(files.into_iter().flatten().collect())
}

pub fn bullet(config: &RunConfig) -> CmdResult {
    let report = bullet_report_on(&config.bullet_params(), &config.bullet_grid())?;
    let path = config.out.join("bullet.json");
    write_json(&path, &report)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    // a closed stdout is not a failure; the file is the product
    let _ = writeln!(std::io::stdout(), "{text}");
    Ok(vec![path])
}

#[derive(Serialize)]
struct RevivalDoc<'a> {
    config_hash: String,
    report: &'a collapse_core::experiment::RevivalReport,
    critical_n: Option<usize>,
}

pub fn revival(config: &RunConfig) -> CmdResult {
    let rc = RevivalConfig {
        n: config.revival_n,
        g: config.g,
        policy: config.policy()?,
        trials: config.trials,
        seed: config.seed,
        method: config.basis_method,
        grid: config.scan_grid(),
        sample_clicks: config.sample_clicks,
    };
    let report = revival_protocol(&rc)?;
    let rows: Vec<CriticalRow> = critical_sweep(&config.n, &rc)?;
    let critical_n = collapse_core::experiment::critical_n(&rows);
    let json = config.out.join("revival.json");
    write_json(&json, &RevivalDoc { config_hash: config.hash(), report: &report, critical_n })?;
    let what = format!("degenerate_ising g={} threshold={} critical-size sweep", config.g, config.threshold);
    let table = write_table(config, "critical_sweep", &what, &rows, |out, c| write_critical_csv(out, c, &rows))?;
    Ok(vec![json, table])
}
