//! Nonlinear truth simulator: 6-DOF object, 3-DOF USV and point-mass UAV
//! coupled by unilateral spring-damper tethers, integrated with fixed-step RK4.

use nalgebra::{SVector, Vector2, Vector3, Vector6};

use crate::dynamics::{
    object_derivative, usv_derivative_with_force, ObjectParams, ObjectState, UavParams, UavState,
    UsvParams, UsvState, WATER_DENSITY,
};
use crate::frames::{rot_z, rotation_zyx};
use crate::CoreError;

/// Magnitude beyond which any state entry is treated as a numerical blow-up.
pub const BLOWUP_LIMIT: f64 = 1e6;

const NS: usize = 24;
type PlantVector = SVector<f64, NS>;

/// Classical fourth-order Runge–Kutta step of ẋ = f(t, x).
pub fn rk4_step<const N: usize, F>(
    mut f: F,
    t: f64,
    x: &SVector<f64, N>,
    dt: f64,
) -> SVector<f64, N>
where
    F: FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let k1 = f(t, x);
    let k2 = f(t + dt / 2.0, &(x + k1 * (dt / 2.0)));
    let k3 = f(t + dt / 2.0, &(x + k2 * (dt / 2.0)));
    let k4 = f(t + dt, &(x + k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Fallible variant of [`rk4_step`]; the first derivative error aborts the step.
pub fn try_rk4_step<const N: usize, F, E>(
    mut f: F,
    t: f64,
    x: &SVector<f64, N>,
    dt: f64,
) -> Result<SVector<f64, N>, E>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
{
    let k1 = f(t, x)?;
    let k2 = f(t + dt / 2.0, &(x + k1 * (dt / 2.0)))?;
    let k3 = f(t + dt / 2.0, &(x + k2 * (dt / 2.0)))?;
    let k4 = f(t + dt, &(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Stiff unilateral spring-damper standing in for an inextensible tether.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherModel {
    pub stiffness: f64,
    pub damping: f64,
    pub rest_length: f64,
}

impl TetherModel {
    pub fn new(rest_length: f64) -> Self {
        Self {
            stiffness: 2e4,
            damping: 200.0,
            rest_length,
        }
    }
}

/// Force on body `a` from a tether to body `b`. Zero while slack; never pushes.
pub fn tether_force(
    p_a: &Vector3<f64>,
    v_a: &Vector3<f64>,
    p_b: &Vector3<f64>,
    v_b: &Vector3<f64>,
    model: &TetherModel,
) -> Vector3<f64> {
    let d = p_b - p_a;
    let sep = d.norm();
    if sep <= model.rest_length || sep == 0.0 {
        return Vector3::zeros();
    }
    let dir = d / sep;
    let stretch_rate = dir.dot(&(v_b - v_a));
    let tension = model.stiffness * (sep - model.rest_length) + model.damping * stretch_rate;
    dir * tension.max(0.0)
}

/// Constant world-frame force on the object over `[t_start, t_start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disturbance {
    pub force: Vector3<f64>,
    pub t_start: f64,
    pub duration: f64,
}

impl Disturbance {
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_start + self.duration
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantParams {
    pub object: ObjectParams,
    /// Quadratic translational drag coefficient ½ρC_dA, N/(m/s)².
    pub quadratic_drag: f64,
    pub usv: UsvParams,
    pub uav: UavParams,
    pub uav_mass: f64,
    /// Tether force the UAV autopilot can cancel with spare thrust, N.
    pub uav_compensation: f64,
    pub usv_tether: TetherModel,
    pub uav_tether: TetherModel,
    /// USV tether attachment point in the body frame.
    pub usv_attach: Vector2<f64>,
    /// False in single-robot operation: the UAV is detached and frozen.
    pub uav_attached: bool,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            object: ObjectParams::default(),
            // sphere with Cd ≈ 0.5 and a half-disc frontal area below the waterline
            quadratic_drag: 0.5 * WATER_DENSITY * 0.5 * (std::f64::consts::PI * 0.25 * 0.25 / 2.0),
            usv: UsvParams::default(),
            uav: UavParams::default(),
            uav_mass: 3.5,
            uav_compensation: 60.0,
            usv_tether: TetherModel::new(4.0),
            uav_tether: TetherModel::new(5.0),
            usv_attach: Vector2::new(-1.0, 0.0),
            uav_attached: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub object: ObjectState,
    pub usv: UsvState,
    pub uav: UavState,
    pub t: f64,
}

/// Tether quantities at one instant, used by monitors and logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherReadout {
    /// Force of the USV tether on the object, world frame.
    pub usv_force: Vector3<f64>,
    /// Force of the UAV tether on the object, world frame.
    pub uav_force: Vector3<f64>,
    pub usv_separation: f64,
    pub uav_separation: f64,
    /// Total tether wrench on the object in its body frame.
    pub wrench_body: Vector6<f64>,
}

impl PlantState {
    fn pack(&self) -> PlantVector {
        let mut x = PlantVector::zeros();
        x.fixed_rows_mut::<6>(0).copy_from(&self.object.eta);
        x.fixed_rows_mut::<6>(6).copy_from(&self.object.nu);
        x.fixed_rows_mut::<3>(12).copy_from(&self.usv.eta);
        x.fixed_rows_mut::<3>(15).copy_from(&self.usv.nu);
        x.fixed_rows_mut::<6>(18).copy_from(&self.uav.eta);
        x
    }

    fn unpack(x: &PlantVector, t: f64) -> Self {
        Self {
            object: ObjectState {
                eta: x.fixed_rows::<6>(0).into_owned(),
                nu: x.fixed_rows::<6>(6).into_owned(),
            },
            usv: UsvState {
                eta: x.fixed_rows::<3>(12).into_owned(),
                nu: x.fixed_rows::<3>(15).into_owned(),
            },
            uav: UavState {
                eta: x.fixed_rows::<6>(18).into_owned(),
            },
            t,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pack().iter().all(|v| v.is_finite())
    }
}

/// World position and velocity of the USV tether attachment point.
pub fn usv_attach_point(usv: &UsvState, attach: &Vector2<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let r = rot_z(usv.yaw());
    let arm = Vector3::new(attach.x, attach.y, 0.0);
    let p = Vector3::new(usv.eta.x, usv.eta.y, 0.0) + r.apply(&arm);
    let yaw_rate = usv.nu.z;
    let v_body = Vector3::new(
        usv.nu.x - yaw_rate * attach.y,
        usv.nu.y + yaw_rate * attach.x,
        0.0,
    );
    (p, r.apply(&v_body))
}

impl PlantParams {
    /// Tether forces and the object wrench for a given state.
    pub fn tethers(&self, s: &PlantState) -> TetherReadout {
        let r_o = rotation_zyx(&s.object.angles());
        let p_o = s.object.position();
        let v_o = r_o.apply(&s.object.nu.fixed_rows::<3>(0).into_owned());
        let (p_a, v_a) = usv_attach_point(&s.usv, &self.usv_attach);
        let usv_force = tether_force(&p_o, &v_o, &p_a, &v_a, &self.usv_tether);
        let (uav_force, uav_separation) = if self.uav_attached {
            let p_u = s.uav.position();
            let v_u = s.uav.velocity() * self.uav.a1;
            (
                tether_force(&p_o, &v_o, &p_u, &v_u, &self.uav_tether),
                (p_u - p_o).norm(),
            )
        } else {
            (Vector3::zeros(), 0.0)
        };
        let f_body = r_o.transpose().apply(&(usv_force + uav_force));
        TetherReadout {
            usv_force,
            uav_force,
            usv_separation: (p_a - p_o).norm(),
            uav_separation,
            wrench_body: Vector6::new(f_body.x, f_body.y, f_body.z, 0.0, 0.0, 0.0),
        }
    }

    fn derivative(
        &self,
        x: &PlantVector,
        u_b: &Vector2<f64>,
        u_u: &Vector3<f64>,
        disturbance: &Vector3<f64>,
    ) -> Result<PlantVector, CoreError> {
        let s = PlantState::unpack(x, 0.0);
        let tethers = self.tethers(&s);
        let r_o = rotation_zyx(&s.object.angles());

        let v_lin = s.object.nu.fixed_rows::<3>(0).into_owned();
        let drag = -v_lin * (self.quadratic_drag * v_lin.norm());
        let dist_body = r_o.transpose().apply(disturbance);
        let mut tau = tethers.wrench_body;
        {
            let mut head = tau.fixed_rows_mut::<3>(0);
            head += drag + dist_body;
        }
        let (eta_o_dot, nu_o_dot) = object_derivative(&s.object, &tau, &self.object)?;

        let r_b = rot_z(s.usv.yaw());
        let f_usv = r_b.transpose().apply(&(-tethers.usv_force));
        let moment = self.usv_attach.x * f_usv.y - self.usv_attach.y * f_usv.x;
        let extra = Vector3::new(f_usv.x, f_usv.y, moment);
        let (eta_b_dot, nu_b_dot) = usv_derivative_with_force(&s.usv, u_b, &extra, &self.usv)?;

        let mut dx = PlantVector::zeros();
        dx.fixed_rows_mut::<6>(0).copy_from(&eta_o_dot);
        dx.fixed_rows_mut::<6>(6).copy_from(&nu_o_dot);
        dx.fixed_rows_mut::<3>(12).copy_from(&eta_b_dot);
        dx.fixed_rows_mut::<3>(15).copy_from(&nu_b_dot);
        if self.uav_attached {
            let f_t = -tethers.uav_force;
            let comp = if f_t.norm() > self.uav_compensation {
                -f_t * (self.uav_compensation / f_t.norm())
            } else {
                -f_t
            };
            let acc = u_u * self.uav.b1 + (f_t + comp) / self.uav_mass;
            let v = s.uav.velocity();
            dx.fixed_rows_mut::<6>(18).copy_from(&Vector6::new(
                self.uav.a1 * v.x,
                acc.x,
                self.uav.a1 * v.y,
                acc.y,
                self.uav.a1 * v.z,
                acc.z,
            ));
        }
        Ok(dx)
    }

    /// One RK4 step with inputs and disturbances held over the step. Inputs are
    /// clipped to the actuator limits; disturbances are gated on `state.t`.
    pub fn step(
        &self,
        state: &PlantState,
        u_b: &Vector2<f64>,
        u_u: &Vector3<f64>,
        disturbances: &[Disturbance],
        dt: f64,
    ) -> Result<PlantState, CoreError> {
        let tm = self.usv.tau_max;
        let u_b = u_b.map(|v| v.clamp(-tm, tm));
        let um = self.uav.u_max;
        let u_u = u_u.map(|v| v.clamp(-um, um));
        let dist: Vector3<f64> = disturbances
            .iter()
            .filter(|d| d.is_active(state.t))
            .map(|d| d.force)
            .sum();
        let x = state.pack();
        let next = try_rk4_step(
            |_, x| self.derivative(x, &u_b, &u_u, &dist),
            state.t,
            &x,
            dt,
        )?;
        if next
            .iter()
            .any(|v| !v.is_finite() || v.abs() > BLOWUP_LIMIT)
        {
            return Err(CoreError::NumericBlowup { t: state.t + dt });
        }
        Ok(PlantState::unpack(&next, state.t + dt))
    }
}
