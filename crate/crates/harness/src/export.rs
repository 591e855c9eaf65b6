//! Files written by the CLI: run logs, summaries and plot series.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::campaign::CampaignReport;
use crate::log::{read_csv, write_csv, write_series, Event, EventKind, LogRow, RunLog};
use crate::metrics::Metrics;
use crate::runner::SLACK_WINDOW;

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct IoFailure {
    pub path: PathBuf,
    pub source: io::Error,
}

fn at(path: &Path) -> impl FnOnce(io::Error) -> IoFailure + '_ {
    move |source| IoFailure { path: path.to_owned(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoFailure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(at(dir))?;
    }
    File::create(path).map(BufWriter::new).map_err(at(path))
}

pub fn export_csv(log: &RunLog, path: &Path) -> Result<(), IoFailure> {
    let mut w = create(path)?;
    write_csv(&log.rows, &mut w).and_then(|_| w.flush()).map_err(at(path))
}

pub fn import_csv(path: &Path) -> Result<Vec<LogRow>, IoFailure> {
    let f = File::open(path).map_err(at(path))?;
    read_csv(f).map_err(at(path))
}

fn write_toml<T: Serialize>(value: &T, path: &Path) -> Result<(), IoFailure> {
    let text = toml::to_string(value).map_err(|e| IoFailure {
        path: path.to_owned(),
        source: io::Error::new(io::ErrorKind::InvalidData, e),
    })?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(at(path))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    mission: &'a str,
    mode: &'a str,
    metrics: &'a Metrics,
}

/// Metrics as TOML under a `[metrics]` table.
pub fn export_summary(metrics: &Metrics, mission: &str, mode: &str, path: &Path) -> Result<(), IoFailure> {
    write_toml(&RunSummary { mission, mode, metrics }, path)
}

pub fn export_campaign(report: &CampaignReport, dir: &Path) -> Result<(), IoFailure> {
    write_toml(report, &dir.join("campaign.toml"))?;
    let path = dir.join("pairs.csv");
    let mut w = create(&path)?;
    let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    (|| {
        writeln!(w, "trajectory,multi,single")?;
        for p in &report.pairs {
            writeln!(w, "{},{},{}", p.trajectory, fmt(p.multi), fmt(p.single))?;
        }
        w.flush()
    })()
    .map_err(at(&path))
}

type Signal = (&'static str, fn(&LogRow) -> f64);

/// Signals written by [`export_plots`], one `t,value` file each.
pub const PLOT_SIGNALS: [Signal; 4] = [
    ("distance", |r| r.distance),
    ("object_speed", |r| r.obj_vx.hypot(r.obj_vy)),
    ("usv_surge", |r| r.usv_u),
    ("uav_speed", |r| (r.uav_vx * r.uav_vx + r.uav_vy * r.uav_vy + r.uav_vz * r.uav_vz).sqrt()),
];

pub fn export_plots(rows: &[LogRow], dir: &Path) -> Result<Vec<PathBuf>, IoFailure> {
    PLOT_SIGNALS
        .iter()
        .map(|(name, f)| {
            let path = dir.join(format!("{name}.csv"));
            let mut w = create(&path)?;
            write_series(rows, name, f, &mut w).and_then(|_| w.flush()).map_err(at(&path))?;
            Ok(path)
        })
        .collect()
}

/// Rebuilds the event list and disturbance windows from the per-row flags.
/// Solver failures and solve times are not in the CSV and stay empty.
pub fn log_from_rows(rows: Vec<LogRow>) -> RunLog {
    let dt = match rows.as_slice() {
        [a, b, ..] => b.t - a.t,
        _ => 0.0,
    };
    let mut log = RunLog::default();
    let mut slack_for = 0.0;
    let mut slack_reported = false;
    let mut lifting_prev = false;
    let mut disturbed_since: Option<f64> = None;
    for r in &rows {
        if r.slack {
            slack_for += dt;
            if slack_for > SLACK_WINDOW + 1e-9 && !slack_reported {
                log.events.push(Event { t: r.t, kind: EventKind::Slack });
                slack_reported = true;
            }
        } else {
            slack_for = 0.0;
            slack_reported = false;
        }
        if r.lifting && !lifting_prev {
            log.events.push(Event { t: r.t, kind: EventKind::Lifting });
        }
        lifting_prev = r.lifting;
        match (r.disturbed, disturbed_since) {
            (true, None) => disturbed_since = Some(r.t),
            (false, Some(t0)) => {
                log.disturbances.push((t0, r.t));
                disturbed_since = None;
            }
            _ => {}
        }
    }
    if let (Some(t0), Some(last)) = (disturbed_since, rows.last()) {
        log.disturbances.push((t0, last.t + dt));
    }
    log.rows = rows;
    log
}
