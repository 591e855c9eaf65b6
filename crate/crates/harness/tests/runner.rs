use std::sync::Arc;

use cotow_core::mission::{MissionOptions, MissionRegistry};
use cotow_core::strategy::{MultiRobot, SingleRobot, TowStrategy};
use cotow_harness::config::ExperimentConfig;
use cotow_harness::log::{read_csv, write_csv, COLUMNS, SCHEMA_LINE};
use cotow_harness::metrics::compute_metrics;
use cotow_harness::runner::{run_experiment, ExperimentSetup};

fn setup(mission: &str, strategy: Arc<dyn TowStrategy>, duration: f64) -> ExperimentSetup {
    let plan = MissionRegistry::default().build(mission, &MissionOptions::default()).unwrap();
    let mut s = ExperimentSetup::new(plan, strategy);
    s.duration = duration;
    s
}

fn csv_bytes(s: &ExperimentSetup) -> Vec<u8> {
    let log = run_experiment(s).unwrap();
    let mut out = Vec::new();
    write_csv(&log.rows, &mut out).unwrap();
    out
}

#[test]
fn scheduler_rates_over_ten_seconds() {
    let log = run_experiment(&setup("line", Arc::new(MultiRobot), 10.0)).unwrap();
    assert_eq!(log.mpc_calls, 100);
    assert_eq!(log.inner_calls, 1000);
    assert_eq!(log.plant_steps, 10_000);
    // 100 Hz rows including both end points
    assert_eq!(log.rows.len(), 1001);
    assert!(log.rows.windows(2).all(|w| w[1].t > w[0].t));
    assert!((log.rows[1].t - 0.01).abs() < 1e-12);
}

#[test]
fn zero_length_run_logs_only_the_start() {
    let s = setup("circle", Arc::new(MultiRobot), 0.0);
    let log = run_experiment(&s).unwrap();
    assert_eq!(log.rows.len(), 1);
    assert_eq!(log.mpc_calls, 0);
    assert_eq!(log.plant_steps, 0);
    let init = s.initial_state();
    assert_eq!(log.rows[0].obj_x, init.object.eta.x);
    assert_eq!(log.rows[0].uav_z, init.uav.eta[4]);
}

#[test]
fn identical_setups_give_identical_bytes() {
    let a = csv_bytes(&setup("disturbance", Arc::new(MultiRobot), 9.0));
    let b = csv_bytes(&setup("disturbance", Arc::new(MultiRobot), 9.0));
    assert!(a == b);
}

#[test]
fn log_round_trips_through_csv() {
    let log = run_experiment(&setup("circle", Arc::new(SingleRobot), 2.0)).unwrap();
    let mut out = Vec::new();
    write_csv(&log.rows, &mut out).unwrap();
    let text = String::from_utf8(out.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SCHEMA_LINE));
    assert_eq!(lines.next().unwrap().split(',').count(), COLUMNS.len());
    let back = read_csv(out.as_slice()).unwrap();
    assert_eq!(back, log.rows);
}

#[test]
fn single_mode_leaves_the_uav_out() {
    let log = run_experiment(&setup("line", Arc::new(SingleRobot), 3.0)).unwrap();
    assert!(log.rows.iter().all(|r| r.uav_planar == 0.0 && r.uav_tension == 0.0));
    assert!(log.rows.iter().all(|r| r.uav_ax == 0.0 && r.uav_ay == 0.0 && r.uav_az == 0.0));
}

#[test]
fn short_multi_run_is_clean() {
    let log = run_experiment(&setup("circle", Arc::new(MultiRobot), 15.0)).unwrap();
    let m = compute_metrics(&log, 10.0).unwrap();
    assert_eq!(m.slack_events, 0);
    assert_eq!(m.lifting_violations, 0);
    assert_eq!(m.solver_failures, 0);
    assert!(m.mean_distance <= m.max_distance);
}

#[test]
fn config_and_direct_setup_agree() {
    let cfg = ExperimentConfig::from_toml("mission = \"line\"\nduration = 3.0\n").unwrap();
    let a = csv_bytes(&cfg.build().unwrap());
    let b = csv_bytes(&setup("line", Arc::new(MultiRobot), 3.0));
    assert!(a == b);
}
