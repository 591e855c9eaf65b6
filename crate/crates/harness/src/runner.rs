//! Fixed-rate scheduler: plant at 1 kHz, inner loops at 100 Hz, MPC at 10 Hz.

use std::sync::Arc;

use cotow_core::dynamics::{check_no_lifting, UavState, UsvState, SLACK_THRESHOLD};
use cotow_core::guidance::{fill_robot_references, GuidanceConfig};
use cotow_core::mission::{build_reference_window, sample_reference, MissionPlan};
use cotow_core::mpc::{MpcConfig, MpcController, MpcOutput};
use cotow_core::plant::{PlantParams, PlantState};
use cotow_core::reference::{
    uav_reference_controller, usv_reference_controller, UavGains, UavReference, UsvGains, UsvReference,
};
use cotow_core::strategy::TowStrategy;
use cotow_core::CoreError;
use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::log::{Event, EventKind, LogRow, RunLog};

/// Slack longer than this is reported as an event, s.
pub const SLACK_WINDOW: f64 = 0.5;

/// Everything needed to run one closed-loop experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub plan: MissionPlan,
    pub strategy: Arc<dyn TowStrategy>,
    pub plant: PlantParams,
    pub mpc: MpcConfig,
    pub usv_gains: UsvGains,
    pub uav_gains: UavGains,
    pub guidance: GuidanceConfig,
    pub duration: f64,
    pub plant_dt: f64,
    /// Plant steps per inner-loop update.
    pub inner_every: usize,
    /// Inner-loop updates per MPC update.
    pub mpc_every: usize,
    /// Initial stretch of both tethers, m, so the run starts taut.
    pub pretension: f64,
    /// UAV tether tension the inner loop holds by nudging the UAV radially, N.
    pub uav_tension_target: f64,
    /// Integral gain of that nudge, m/(N·s); zero disables it.
    pub uav_tension_gain: f64,
    /// Fault injection: raises the UAV reference past the planner, for monitor checks.
    pub uav_z_step: Option<AltitudeStep>,
}

/// Vertical offset added to the UAV inner-loop reference from `t` on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeStep {
    pub t: f64,
    pub dz: f64,
}

impl ExperimentSetup {
    pub fn new(plan: MissionPlan, strategy: Arc<dyn TowStrategy>) -> Self {
        let duration = plan.duration;
        Self {
            plan,
            strategy,
            plant: PlantParams::default(),
            mpc: MpcConfig::default(),
            usv_gains: UsvGains::default(),
            uav_gains: UavGains::default(),
            guidance: GuidanceConfig::default(),
            duration,
            plant_dt: 1e-3,
            inner_every: 10,
            mpc_every: 10,
            pretension: 0.0005,
            uav_tension_target: 5.0,
            uav_tension_gain: 3e-3,
            uav_z_step: None,
        }
    }

    /// Robots ahead of the object along the initial path tangent, tethers just taut.
    pub fn initial_state(&self) -> PlantState {
        let p0 = self.plan.start_point();
        let dir = self.plan.start_tangent();
        let psi = dir.y.atan2(dir.x);
        let mut s = PlantState::default();
        s.object.eta.x = p0.x;
        s.object.eta.y = p0.y;
        let usv_reach = self.plant.usv_tether.rest_length + self.pretension;
        let attach = self.plant.usv_attach;
        // place the stern attach point on the tangent ray
        let a = p0 + dir * usv_reach;
        let (sn, cs) = psi.sin_cos();
        let arm = Vector2::new(cs * attach.x - sn * attach.y, sn * attach.x + cs * attach.y);
        let b = a - arm;
        s.usv = UsvState { eta: Vector3::new(b.x, b.y, psi), nu: Vector3::zeros() };
        let l = self.plant.uav_tether.rest_length + self.pretension;
        let z = self.guidance.uav_altitude.min(0.9 * l);
        let r = (l * l - z * z).sqrt();
        let b = psi + self.guidance.uav_bearing;
        let u = p0 + Vector2::new(b.cos(), b.sin()) * r;
        s.uav = UavState::new(Vector3::new(u.x, u.y, z), Vector3::zeros());
        s
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("simulation diverged at t = {t:.3} s")]
    SimulationDiverged { t: f64, log: Box<RunLog> },
    #[error(transparent)]
    Setup(#[from] CoreError),
}

/// Linear interpolation along the MPC plan `tau` seconds after it was computed.
fn plan_refs(plan: &MpcOutput, tau: f64, dt: f64, d_tau: f64) -> (UsvReference, UavReference) {
    let n = plan.usv_traj.len();
    let s = (tau / dt).max(0.0);
    let k = (s.floor() as usize).min(n - 2);
    let f = (s - k as f64).min(1.0);
    let lerp = |a: &Vector3<f64>, b: &Vector3<f64>| a + (b - a) * f;
    let (e0, n0) = &plan.usv_traj[k];
    let (e1, n1) = &plan.usv_traj[k + 1];
    let (p0, v0) = &plan.uav_traj[k];
    let (p1, v1) = &plan.uav_traj[k + 1];
    let u = plan.inputs[k.min(plan.inputs.len() - 1)];
    (
        UsvReference {
            eta: lerp(e0, e1),
            nu: lerp(n0, n1),
            feed_forward: Vector2::new(u[0] + u[1], 0.5 * d_tau * (u[0] - u[1])),
        },
        UavReference { p: lerp(p0, p1), v: lerp(v0, v1), feed_forward: Vector3::new(u[2], u[3], u[4]) },
    )
}

/// Runs one experiment to completion.
pub fn run_experiment(setup: &ExperimentSetup) -> Result<RunLog, RunError> {
    let mut plant = setup.plant.clone();
    setup.strategy.adapt_plant(&mut plant);
    let mut ctrl = MpcController::new(
        setup.mpc.clone(),
        &plant.object,
        &plant.usv,
        &plant.uav,
        setup.strategy.clone(),
    )?;
    let dt_mpc = ctrl.config().dt;
    let n = ctrl.config().n;
    let uses_uav = setup.strategy.uses_uav();

    let steps = (setup.duration / setup.plant_dt).round().max(0.0) as usize;
    let mut state = setup.initial_state();
    let mut log = RunLog {
        disturbances: setup.plan.disturbances.iter().map(|d| (d.t_start, d.t_end())).collect(),
        ..RunLog::default()
    };
    let mut last_plan: Option<(f64, MpcOutput)> = None;
    let mut u_b = Vector2::zeros();
    let mut u_u = Vector3::zeros();
    let mut qp = (String::from("none"), 0u32, false);
    let mut slack_for = 0.0;
    let mut slack_reported = false;
    let mut lifting_prev = false;
    let mut psi_plan = state.usv.eta.z;
    let mut psi_los = state.usv.eta.z;
    let inner_dt = setup.plant_dt * setup.inner_every as f64;
    let nudge_limit = ctrl.config().tether.epsilon;
    let mut nudge = 0.0;

    for i in 0..=steps {
        let t = i as f64 * setup.plant_dt;
        state.t = t;
        let inner_tick = i % setup.inner_every == 0;
        if inner_tick && i < steps {
            if (i / setup.inner_every).is_multiple_of(setup.mpc_every) {
                let mut window = build_reference_window(&setup.plan, t, n, dt_mpc);
                fill_robot_references(
                    &mut window,
                    &setup.plan,
                    t,
                    dt_mpc,
                    &state.object.position(),
                    state.usv.eta.z,
                    &setup.guidance,
                );
                psi_los = window.x_r[0][cotow_core::dynamics::layout::ETA_B.start + 2];
                log.mpc_calls += 1;
                match ctrl.control_step(&state.object, &state.usv, &state.uav, &window) {
                    Ok(out) => {
                        log.solve_times.push(out.solve_time);
                        qp = (out.qp_status.to_string(), out.iterations as u32, out.relaxed);
                        last_plan = Some((t, out));
                    }
                    Err(CoreError::SolverFailed(status)) => {
                        qp = (status.to_string(), 0, false);
                        log.events.push(Event { t, kind: EventKind::SolverFailure });
                    }
                    Err(CoreError::DegenerateGeometry { .. }) => {
                        qp = ("degenerate".into(), 0, false);
                        log.events.push(Event { t, kind: EventKind::SolverFailure });
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if let Some((t0, plan)) = &last_plan {
                let (usv_ref, mut uav_ref) = plan_refs(plan, t - t0, dt_mpc, plant.usv.d_tau);
                psi_plan = usv_ref.eta.z;
                let cmd = usv_reference_controller(&state.usv, &usv_ref, &setup.usv_gains, &plant.usv);
                u_b = cmd.as_vector();
                if uses_uav {
                    // never let the plan slacken the UAV tether below the target tension
                    let tension = plant.tethers(&state).uav_force.norm();
                    nudge = (nudge + setup.uav_tension_gain * (setup.uav_tension_target - tension) * inner_dt)
                        .clamp(0.0, nudge_limit);
                    let p_o = state.object.position();
                    let l = plant.uav_tether.rest_length;
                    let dz = uav_ref.p.z - p_o.z;
                    let planar = (uav_ref.p - p_o).xy();
                    if let (Some(dir), true) = (planar.try_normalize(1e-9), l > dz.abs()) {
                        let r = (l * l - dz * dz).sqrt();
                        let stretch = setup.uav_tension_target / plant.uav_tether.stiffness;
                        let floor = r + stretch * l / r + nudge;
                        if planar.norm() < floor {
                            uav_ref.p.x = p_o.x + dir.x * floor;
                            uav_ref.p.y = p_o.y + dir.y * floor;
                            // radial motion follows the object, not the plan
                            let n = Vector3::new(dir.x, dir.y, 0.0);
                            let v_o = state.object.world_velocity().unwrap_or_default();
                            uav_ref.v += n * (v_o.dot(&n) - uav_ref.v.dot(&n));
                            uav_ref.feed_forward -= n * uav_ref.feed_forward.dot(&n);
                        }
                    }
                    if let Some(step) = setup.uav_z_step.filter(|s| t >= s.t) {
                        uav_ref.p.z += step.dz;
                        uav_ref.v.z = 0.0;
                        uav_ref.feed_forward.z = 0.0;
                    }
                } else {
                    uav_ref = UavReference { p: state.uav.position(), ..Default::default() };
                }
                u_u = uav_reference_controller(&state.uav, &uav_ref, &setup.uav_gains, plant.uav.u_max).accel;
            }
            log.inner_calls += 1;
        }
        if inner_tick {
            let readout = plant.tethers(&state);
            let usv_taut = readout.usv_force.norm() > SLACK_THRESHOLD;
            let uav_taut = !uses_uav || readout.uav_force.norm() > SLACK_THRESHOLD;
            if usv_taut && uav_taut {
                slack_for = 0.0;
                slack_reported = false;
            } else {
                slack_for += inner_dt;
                if slack_for > SLACK_WINDOW + 1e-9 && !slack_reported {
                    log.events.push(Event { t, kind: EventKind::Slack });
                    slack_reported = true;
                }
            }
            let lifting = !check_no_lifting(&readout.wrench_body, &state.object.eta, &plant.object).unwrap_or(false);
            if lifting && !lifting_prev {
                log.events.push(Event { t, kind: EventKind::Lifting });
            }
            lifting_prev = lifting;

            let reference = sample_reference(&setup.plan, t).p;
            let p_o = state.object.position();
            let v_o = state.object.world_velocity().unwrap_or_else(|_| Vector3::repeat(f64::NAN));
            let p_u = state.uav.position();
            let v_u = state.uav.velocity();
            log.rows.push(LogRow {
                t,
                obj_x: p_o.x,
                obj_y: p_o.y,
                obj_z: p_o.z,
                obj_vx: v_o.x,
                obj_vy: v_o.y,
                obj_vz: v_o.z,
                usv_x: state.usv.eta.x,
                usv_y: state.usv.eta.y,
                usv_psi: state.usv.eta.z,
                usv_u: state.usv.nu.x,
                usv_v: state.usv.nu.y,
                usv_r: state.usv.nu.z,
                usv_psi_plan: psi_plan,
                usv_psi_los: psi_los,
                uav_x: p_u.x,
                uav_y: p_u.y,
                uav_z: p_u.z,
                uav_vx: v_u.x,
                uav_vy: v_u.y,
                uav_vz: v_u.z,
                ref_x: reference.x,
                ref_y: reference.y,
                ref_z: reference.z,
                distance: (p_o.xy() - reference.xy()).norm(),
                usv_tether: readout.usv_separation,
                uav_tether: readout.uav_separation,
                uav_planar: if uses_uav { (p_u.xy() - p_o.xy()).norm() } else { 0.0 },
                usv_tension: readout.usv_force.norm(),
                uav_tension: readout.uav_force.norm(),
                tau_port: u_b.x,
                tau_starboard: u_b.y,
                uav_ax: u_u.x,
                uav_ay: u_u.y,
                uav_az: u_u.z,
                qp_status: qp.0.clone(),
                qp_iterations: qp.1,
                qp_relaxed: qp.2,
                disturbed: setup.plan.disturbances.iter().any(|d| d.is_active(t)),
                slack: !(usv_taut && uav_taut),
                lifting,
            });
        }
        if i == steps {
            break;
        }
        match plant.step(&state, &u_b, &u_u, &setup.plan.disturbances, setup.plant_dt) {
            Ok(next) => state = next,
            Err(_) => {
                return Err(RunError::SimulationDiverged { t, log: Box::new(log) });
            }
        }
        log.plant_steps += 1;
    }
    Ok(log)
}
