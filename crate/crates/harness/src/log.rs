//! Run logs and their CSV form.

use std::io::{self, BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

/// First line of every run log; bump the version when the columns change.
pub const SCHEMA_LINE: &str = "# cotow-runlog v1";

/// One 100 Hz sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LogRow {
    pub t: f64,
    pub obj_x: f64,
    pub obj_y: f64,
    pub obj_z: f64,
    pub obj_vx: f64,
    pub obj_vy: f64,
    pub obj_vz: f64,
    pub usv_x: f64,
    pub usv_y: f64,
    pub usv_psi: f64,
    pub usv_u: f64,
    pub usv_v: f64,
    pub usv_r: f64,
    pub usv_psi_plan: f64,
    pub usv_psi_los: f64,
    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_z: f64,
    pub uav_vx: f64,
    pub uav_vy: f64,
    pub uav_vz: f64,
    pub ref_x: f64,
    pub ref_y: f64,
    pub ref_z: f64,
    pub distance: f64,
    pub usv_tether: f64,
    pub uav_tether: f64,
    pub uav_planar: f64,
    pub usv_tension: f64,
    pub uav_tension: f64,
    pub tau_port: f64,
    pub tau_starboard: f64,
    pub uav_ax: f64,
    pub uav_ay: f64,
    pub uav_az: f64,
    pub qp_status: String,
    pub qp_iterations: u32,
    pub qp_relaxed: bool,
    pub disturbed: bool,
    pub slack: bool,
    pub lifting: bool,
}

/// Column names in CSV order.
pub const COLUMNS: [&str; 41] = [
    "t", "obj_x", "obj_y", "obj_z", "obj_vx", "obj_vy", "obj_vz", "usv_x", "usv_y", "usv_psi", "usv_u",
    "usv_v", "usv_r", "usv_psi_plan", "usv_psi_los", "uav_x", "uav_y", "uav_z", "uav_vx", "uav_vy", "uav_vz", "ref_x", "ref_y", "ref_z",
    "distance", "usv_tether", "uav_tether", "uav_planar", "usv_tension", "uav_tension", "tau_port",
    "tau_starboard", "uav_ax", "uav_ay", "uav_az", "qp_status", "qp_iterations", "qp_relaxed", "disturbed",
    "slack", "lifting",
];

/// Discrete events raised by the monitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A tether stayed slack longer than the allowed window.
    Slack,
    /// The vertical tether pull exceeded the object's weight.
    Lifting,
    /// The QP failed and the previous plan was reused.
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub rows: Vec<LogRow>,
    pub events: Vec<Event>,
    /// Wall-clock QP times, s. Kept out of the CSV so logs stay reproducible.
    pub solve_times: Vec<f64>,
    /// Disturbance windows as (start, end), s.
    pub disturbances: Vec<(f64, f64)>,
    pub mpc_calls: usize,
    pub inner_calls: usize,
    pub plant_steps: usize,
}

impl RunLog {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

pub fn write_csv<W: Write>(rows: &[LogRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    csv.write_record(COLUMNS)?;
    for r in rows {
        csv.serialize(r)?;
    }
    csv.flush()
}

pub fn read_csv<R: Read>(r: R) -> io::Result<Vec<LogRow>> {
    let mut buf = BufReader::new(r);
    let mut first = String::new();
    buf.read_line(&mut first)?;
    if first.trim_end() != SCHEMA_LINE {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported log schema line: {:?}", first.trim_end()),
        ));
    }
    let mut csv = csv::Reader::from_reader(buf);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    if header != COLUMNS {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "log columns do not match schema v1"));
    }
    csv.deserialize().map(|r| r.map_err(io::Error::from)).collect()
}

/// Two-column `t,value` series for plotting.
pub fn write_series<W: Write>(rows: &[LogRow], name: &str, f: impl Fn(&LogRow) -> f64, mut w: W) -> io::Result<()> {
    writeln!(w, "t,{name}")?;
    for r in rows {
        writeln!(w, "{},{}", r.t, f(r))?;
    }
    Ok(())
}
