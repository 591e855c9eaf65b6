//! Robot slots of the reference window.
//!
//! The USV cannot be steered sideways by its own thrusters, so its yaw
//! reference comes from line-of-sight guidance toward a point ahead on the path.

use nalgebra::{Vector2, Vector3};

use crate::dynamics::layout;
use crate::frames::wrap_angle;
use crate::mission::{sample_reference, MissionPlan};
use crate::mpc::ReferenceWindow;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidanceConfig {
    /// Look-ahead along the path, s.
    pub lookahead: f64,
    /// UAV hover altitude above the object, m.
    pub uav_altitude: f64,
    /// Planar UAV offset from the reference point, m; the taut-tether radius.
    pub uav_radius: f64,
    /// Direction of the UAV offset relative to the path tangent, rad (negative is starboard).
    /// The default trails the object, where the pull never fights the USV's.
    pub uav_bearing: f64,
    /// Planar USV offset ahead of the object along the line of sight, m.
    pub usv_standoff: f64,
    /// Below this distance to the look-ahead point the previous heading is kept, m.
    pub min_distance: f64,
    /// Anchor the UAV offset on the measured object rather than the reference point.
    pub uav_follow_object: bool,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            lookahead: 6.0,
            uav_altitude: 3.0,
            uav_radius: 4.0,
            uav_bearing: std::f64::consts::PI,
            usv_standoff: 4.0,
            min_distance: 0.5,
            uav_follow_object: true,
        }
    }
}

/// Fills USV and UAV references for a window sampled at `t + k·dt`.
/// Yaw references are unwrapped around `usv_yaw` so they stay continuous.
///
/// The UAV is placed at a fixed bearing from the reference point. The rigid
/// coupling in the prediction model does not care where the UAV sits, but a
/// tether can only pull, so keeping it off the USV's line keeps both taut.
pub fn fill_robot_references(
    window: &mut ReferenceWindow,
    plan: &MissionPlan,
    t: f64,
    dt: f64,
    obj_pos: &Vector3<f64>,
    usv_yaw: f64,
    cfg: &GuidanceConfig,
) {
    use layout::*;
    let p_now = sample_reference(plan, t).p;
    let mut psi_prev = usv_yaw;
    let mut psi = Vec::with_capacity(window.x_r.len());
    for k in 0..window.x_r.len() {
        let tk = t + k as f64 * dt;
        let expected = obj_pos + (sample_reference(plan, tk).p - p_now);
        let ahead = sample_reference(plan, tk + cfg.lookahead).p;
        let los = Vector2::new(ahead.x - expected.x, ahead.y - expected.y);
        let psi_k = if los.norm() < cfg.min_distance {
            psi_prev
        } else {
            psi_prev + wrap_angle(los.y.atan2(los.x) - psi_prev)
        };
        psi.push(psi_k);
        psi_prev = psi_k;

        let x = &mut window.x_r[k];
        let v_ref = Vector3::new(x[V_O.start], x[V_O.start + 1], 0.0);
        let p_ref = Vector3::new(x[P_O.start], x[P_O.start + 1], x[P_O.start + 2]);
        let heading = if v_ref.norm() > 1e-9 { v_ref.y.atan2(v_ref.x) } else { psi_k };
        let bearing = heading + cfg.uav_bearing;
        let anchor = if cfg.uav_follow_object { expected } else { p_ref };
        let uav = anchor + Vector3::new(bearing.cos(), bearing.sin(), 0.0) * cfg.uav_radius;
        x[ETA_B.start] = expected.x + psi_k.cos() * cfg.usv_standoff;
        x[ETA_B.start + 1] = expected.y + psi_k.sin() * cfg.usv_standoff;
        x[ETA_B.start + 2] = psi_k;
        x[NU_B.start] = v_ref.norm();
        x[NU_B.start + 1] = 0.0;
        x[UAV_POS[0]] = uav.x;
        x[UAV_POS[1]] = uav.y;
        x[UAV_POS[2]] = expected.z + cfg.uav_altitude;
        x[UAV_VEL[2]] = 0.0;
    }
    let len = window.x_r.len();
    for k in 0..len {
        let (a, b) = if k + 1 < len { (k, k + 1) } else if k > 0 { (k - 1, k) } else { (k, k) };
        for axis in 0..2 {
            let (ip, iv) = (UAV_POS[axis], UAV_VEL[axis]);
            let v = if a == b { 0.0 } else { (window.x_r[b][ip] - window.x_r[a][ip]) / dt };
            window.x_r[k][iv] = v;
        }
    }
    for k in 0..psi.len() {
        let rate = if k + 1 < psi.len() {
            (psi[k + 1] - psi[k]) / dt
        } else if k > 0 {
            (psi[k] - psi[k - 1]) / dt
        } else {
            0.0
        };
        window.x_r[k][NU_B.start + 2] = rate;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::{build_reference_window, LineMission, MissionBuilder, MissionOptions};
    use approx::assert_relative_eq;

    #[test]
    fn straight_line_points_east() {
        let plan = LineMission.build(&MissionOptions::default());
        let mut w = build_reference_window(&plan, 0.0, 30, 0.1);
        fill_robot_references(
            &mut w,
            &plan,
            0.0,
            0.1,
            &Vector3::zeros(),
            0.3,
            &GuidanceConfig::default(),
        );
        for x in &w.x_r {
            assert_relative_eq!(x[layout::ETA_B.start + 2], 0.0, epsilon = 1e-12);
            assert_relative_eq!(x[layout::UAV_POS[2]], 3.0);
        }
    }

    #[test]
    fn yaw_stays_near_current_heading() {
        let plan = LineMission.build(&MissionOptions::default());
        let mut w = build_reference_window(&plan, 0.0, 5, 0.1);
        fill_robot_references(
            &mut w,
            &plan,
            0.0,
            0.1,
            &Vector3::zeros(),
            6.0,
            &GuidanceConfig::default(),
        );
        let psi = w.x_r[0][layout::ETA_B.start + 2];
        assert!((psi - 6.0).abs() <= std::f64::consts::PI);
        assert_relative_eq!(wrap_angle(psi), 0.0, epsilon = 1e-12);
    }
}
