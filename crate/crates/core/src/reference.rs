//! Inner-loop tracking laws: USV surge/yaw PD with thrust allocation, UAV
//! position PD with acceleration feed-forward.

use nalgebra::{Vector2, Vector3};

use crate::dynamics::{UavState, UsvParams, UsvState};
use crate::frames::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UsvCommand {
    pub tau_port: f64,
    pub tau_starboard: f64,
}

impl UsvCommand {
    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.tau_port, self.tau_starboard)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavCommand {
    pub accel: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsvGains {
    pub kp_surge: f64,
    pub kd_surge: f64,
    pub kp_yaw: f64,
    pub kd_yaw: f64,
}

impl Default for UsvGains {
    fn default() -> Self {
        Self {
            kp_surge: 60.0,
            kd_surge: 120.0,
            kp_yaw: 200.0,
            kd_yaw: 150.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for UavGains {
    fn default() -> Self {
        Self { kp: 4.0, kd: 4.0 }
    }
}

/// USV setpoint: world pose, body-frame velocity and optional feed-forward
/// generalized force (surge force, yaw moment).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UsvReference {
    pub eta: Vector3<f64>,
    pub nu: Vector3<f64>,
    pub feed_forward: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavReference {
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub feed_forward: Vector3<f64>,
}

/// Inverts the surge and yaw rows of the twin-thruster map.
pub fn thrust_allocation(tau_surge: f64, tau_yaw: f64, d_tau: f64) -> UsvCommand {
    UsvCommand {
        tau_port: tau_surge / 2.0 + tau_yaw / d_tau,
        tau_starboard: tau_surge / 2.0 - tau_yaw / d_tau,
    }
}

/// Scales both thrusts by the same factor so the larger one meets the limit.
pub fn saturate_preserving_ratio(cmd: UsvCommand, tau_max: f64) -> UsvCommand {
    let peak = cmd.tau_port.abs().max(cmd.tau_starboard.abs());
    if peak <= tau_max {
        return cmd;
    }
    let k = tau_max / peak;
    UsvCommand {
        tau_port: cmd.tau_port * k,
        tau_starboard: cmd.tau_starboard * k,
    }
}

/// PD on body-frame surge position/velocity error and yaw/yaw-rate error.
pub fn usv_reference_controller(
    state: &UsvState,
    reference: &UsvReference,
    gains: &UsvGains,
    params: &UsvParams,
) -> UsvCommand {
    let psi = state.eta.z;
    let (s, c) = psi.sin_cos();
    let ex = reference.eta.x - state.eta.x;
    let ey = reference.eta.y - state.eta.y;
    let e_surge = c * ex + s * ey;
    let e_u = reference.nu.x - state.nu.x;
    let e_psi = wrap_angle(reference.eta.z - psi);
    let e_r = reference.nu.z - state.nu.z;
    let tau_x = reference.feed_forward.x + gains.kp_surge * e_surge + gains.kd_surge * e_u;
    let tau_n = reference.feed_forward.y + gains.kp_yaw * e_psi + gains.kd_yaw * e_r;
    saturate_preserving_ratio(
        thrust_allocation(tau_x, tau_n, params.d_tau),
        params.tau_max,
    )
}

/// PD on position/velocity error plus feed-forward, clipped per axis.
pub fn uav_reference_controller(
    state: &UavState,
    reference: &UavReference,
    gains: &UavGains,
    u_max: f64,
) -> UavCommand {
    let a = reference.feed_forward
        + (reference.p - state.position()) * gains.kp
        + (reference.v - state.velocity()) * gains.kd;
    UavCommand {
        accel: a.map(|v| v.clamp(-u_max, u_max)),
    }
}
