//! Continuous-time models of the floating object, USV and UAV, the tether
//! coupling, and the stacked linear model used by the controller.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix3x2, Matrix6, SMatrix, Vector2, Vector3, Vector6};

use crate::frames::{euler_to_transform, rot_z, EulerAngles, YawAngle};
use crate::CoreError;

pub const WATER_DENSITY: f64 = 1025.0;
pub const GRAVITY: f64 = 9.81;
/// Tether tension below which a tether counts as slack.
pub const SLACK_THRESHOLD: f64 = 1e-6;

/// State layout of the coupled model.
pub mod layout {
    use std::ops::Range;

    pub const NX: usize = 18;
    pub const NU: usize = 5;
    pub const P_O: Range<usize> = 0..3;
    pub const V_O: Range<usize> = 3..6;
    pub const ETA_B: Range<usize> = 6..9;
    pub const NU_B: Range<usize> = 9..12;
    pub const ETA_U: Range<usize> = 12..18;
    /// UAV position entries inside the interleaved (x, u, y, v, z, w) block.
    pub const UAV_POS: [usize; 3] = [12, 14, 16];
    pub const UAV_VEL: [usize; 3] = [13, 15, 17];
    pub const U_B: Range<usize> = 0..2;
    pub const U_U: Range<usize> = 2..5;
}

pub type StateMatrix = SMatrix<f64, { layout::NX }, { layout::NX }>;
pub type InputMatrix = SMatrix<f64, { layout::NX }, { layout::NU }>;
pub type StateVector = SMatrix<f64, { layout::NX }, 1>;
pub type InputVector = SMatrix<f64, { layout::NU }, 1>;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectParams {
    pub m_o: f64,
    pub m_i: Matrix6<f64>,
    pub m_a: Matrix6<f64>,
    pub d: Matrix6<f64>,
    pub g: Matrix6<f64>,
    pub g_mag: f64,
}

impl ObjectParams {
    /// Floating sphere: half-submerged added mass ½ρ(4/3)πr³ per translational axis,
    /// heave restoring ρgπr², small metacentric roll/pitch restoring.
    pub fn sphere(radius: f64, mass: f64, damping: [f64; 6]) -> Self {
        let inertia = 0.4 * mass * radius * radius;
        let added = 0.5 * WATER_DENSITY * 4.0 / 3.0 * PI * radius.powi(3);
        let heave = WATER_DENSITY * GRAVITY * PI * radius * radius;
        let tilt = 0.05 * mass * GRAVITY;
        Self {
            m_o: mass,
            m_i: Matrix6::from_diagonal(&Vector6::new(mass, mass, mass, inertia, inertia, inertia)),
            m_a: Matrix6::from_diagonal(&Vector6::new(added, added, added, 0.0, 0.0, 0.0)),
            d: Matrix6::from_diagonal(&Vector6::from_column_slice(&damping)),
            g: Matrix6::from_diagonal(&Vector6::new(0.0, 0.0, heave, tilt, tilt, 0.0)),
            g_mag: GRAVITY,
        }
    }

    pub fn mass_matrix(&self) -> Matrix6<f64> {
        self.m_i + self.m_a
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let m = self.mass_matrix();
        if !(self.m_o > 0.0) || (m - m.transpose()).amax() > 1e-9 || m.cholesky().is_none() {
            return Err(CoreError::SingularMass("object"));
        }
        if !psd(&self.d) || !psd(&self.g) {
            return Err(CoreError::InvalidParameter(
                "object damping/restoring must be PSD".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ObjectParams {
    fn default() -> Self {
        Self::sphere(0.25, 5.0, [15.0, 15.0, 30.0, 1.0, 1.0, 1.0])
    }
}

fn psd(m: &Matrix6<f64>) -> bool {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().all(|&e| e >= -1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectState {
    /// (x, y, z, φ, θ, ψ) in the world frame.
    pub eta: Vector6<f64>,
    /// (u, v, w, p, q, r) in the body frame.
    pub nu: Vector6<f64>,
}

impl ObjectState {
    pub fn at(position: Vector3<f64>) -> Self {
        let mut eta = Vector6::zeros();
        eta.fixed_rows_mut::<3>(0).copy_from(&position);
        Self {
            eta,
            nu: Vector6::zeros(),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        self.eta.fixed_rows::<3>(0).into_owned()
    }

    pub fn angles(&self) -> EulerAngles {
        EulerAngles::new(self.eta[3], self.eta[4], self.eta[5])
    }

    /// Translational velocity in the world frame.
    pub fn world_velocity(&self) -> Result<Vector3<f64>, CoreError> {
        let j = euler_to_transform(&self.angles())?;
        Ok(j.fixed_view::<3, 3>(0, 0) * self.nu.fixed_rows::<3>(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsvParams {
    pub m_i: Matrix3<f64>,
    pub m_a: Matrix3<f64>,
    pub d: Matrix3<f64>,
    pub d_tau: f64,
    pub tau_max: f64,
}

impl UsvParams {
    /// Diagonal rigid-body inertia with added mass as a fraction of it.
    pub fn diagonal(
        mass: f64,
        yaw_inertia: f64,
        added_fraction: f64,
        damping: [f64; 3],
        d_tau: f64,
        tau_max: f64,
    ) -> Self {
        let m_i = Matrix3::from_diagonal(&Vector3::new(mass, mass, yaw_inertia));
        Self {
            m_i,
            m_a: m_i * added_fraction,
            d: Matrix3::from_diagonal(&Vector3::from_column_slice(&damping)),
            d_tau,
            tau_max,
        }
    }

    pub fn mass_matrix(&self) -> Matrix3<f64> {
        self.m_i + self.m_a
    }

    /// Actuator map from (τ_port, τ_starboard) to (X, Y, N).
    pub fn b_matrix(&self) -> Matrix3x2<f64> {
        Matrix3x2::new(1.0, 1.0, 0.0, 0.0, self.d_tau / 2.0, -self.d_tau / 2.0)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.mass_matrix().try_inverse().is_none() {
            return Err(CoreError::SingularMass("USV"));
        }
        if !(self.d_tau > 0.0) || !(self.tau_max > 0.0) {
            return Err(CoreError::InvalidParameter(
                "USV d_tau and tau_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for UsvParams {
    fn default() -> Self {
        Self::diagonal(180.0, 120.0, 0.2, [51.3, 40.0, 400.0], 2.4, 250.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UsvState {
    /// (x, y, ψ) in the world frame.
    pub eta: Vector3<f64>,
    /// (u, v, r) in the body frame.
    pub nu: Vector3<f64>,
}

impl UsvState {
    pub fn yaw(&self) -> YawAngle {
        YawAngle::new(self.eta[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavParams {
    pub a1: f64,
    pub b1: f64,
    pub u_max: f64,
    pub v_max: f64,
}

impl UavParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.a1 > 0.0 && self.b1 > 0.0 && self.u_max > 0.0 && self.v_max > 0.0 {
            Ok(())
        } else {
            Err(CoreError::InvalidParameter(
                "UAV a1, b1, u_max, v_max must be positive".into(),
            ))
        }
    }
}

impl Default for UavParams {
    fn default() -> Self {
        Self {
            a1: 1.0,
            b1: 1.0,
            u_max: 5.0,
            v_max: 5.0,
        }
    }
}

/// Interleaved (x, u, y, v, z, w) position/velocity state in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UavState {
    pub eta: Vector6<f64>,
}

impl UavState {
    pub fn new(p: Vector3<f64>, v: Vector3<f64>) -> Self {
        Self {
            eta: Vector6::new(p.x, v.x, p.y, v.y, p.z, v.z),
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        Vector3::new(self.eta[0], self.eta[2], self.eta[4])
    }

    pub fn velocity(&self) -> Vector3<f64> {
        Vector3::new(self.eta[1], self.eta[3], self.eta[5])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherSpec {
    pub l_usv: f64,
    pub l_uav: f64,
    pub epsilon: f64,
}

impl TetherSpec {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.l_usv > 0.0 && self.l_uav > 0.0 && self.epsilon > 0.0 && self.epsilon < self.l_uav {
            Ok(())
        } else {
            Err(CoreError::InvalidParameter(
                "tether lengths must be positive and 0 < ε < l_uav".into(),
            ))
        }
    }
}

impl Default for TetherSpec {
    fn default() -> Self {
        Self {
            l_usv: 4.0,
            l_uav: 5.0,
            epsilon: 0.3,
        }
    }
}

/// η̇ = J(Θ)ν and ν̇ = M⁻¹(τ − Dν − Gη).
pub fn object_derivative(
    state: &ObjectState,
    tau_o: &Vector6<f64>,
    params: &ObjectParams,
) -> Result<(Vector6<f64>, Vector6<f64>), CoreError> {
    let j = euler_to_transform(&state.angles())?;
    let m = params.mass_matrix();
    let rhs = tau_o - params.d * state.nu - params.g * state.eta;
    let nu_dot = m
        .lu()
        .solve(&rhs)
        .ok_or(CoreError::SingularMass("object"))?;
    Ok((j * state.nu, nu_dot))
}

/// Tether wrenches implied by rigidly transmitting the robot accelerations:
/// F_u = M·(a_u, 0), F_b = M·(a_b, 0), τ_o = F_u + F_b.
pub fn tether_wrench(
    uav_accel: &Vector3<f64>,
    usv_accel: &Vector3<f64>,
    params: &ObjectParams,
) -> (Vector6<f64>, Vector6<f64>, Vector6<f64>) {
    let m = params.mass_matrix();
    let pad = |a: &Vector3<f64>| Vector6::new(a.x, a.y, a.z, 0.0, 0.0, 0.0);
    let f_u = m * pad(uav_accel);
    let f_b = m * pad(usv_accel);
    (f_u, f_b, f_u + f_b)
}

/// True while the vertical world component of the transformed wrench stays below the weight.
pub fn check_no_lifting(
    tau_o: &Vector6<f64>,
    eta_o: &Vector6<f64>,
    params: &ObjectParams,
) -> Result<bool, CoreError> {
    let angles = EulerAngles::new(eta_o[3], eta_o[4], eta_o[5]);
    let vertical = (euler_to_transform(&angles)? * tau_o)[2];
    Ok(vertical < params.m_o * params.g_mag)
}

/// True when the translational part of a tether force exceeds the slack threshold.
pub fn check_taut(force: &Vector6<f64>) -> bool {
    force.fixed_rows::<3>(0).norm() > SLACK_THRESHOLD
}

/// η̇ = J_b(ψ)ν and ν̇ = (M_I + M_A)⁻¹(B_b·u − Dν).
pub fn usv_derivative(
    state: &UsvState,
    u_b: &Vector2<f64>,
    params: &UsvParams,
) -> Result<(Vector3<f64>, Vector3<f64>), CoreError> {
    usv_derivative_with_force(state, u_b, &Vector3::zeros(), params)
}

/// As [`usv_derivative`] with an extra body-frame generalized force (X, Y, N).
pub fn usv_derivative_with_force(
    state: &UsvState,
    u_b: &Vector2<f64>,
    extra: &Vector3<f64>,
    params: &UsvParams,
) -> Result<(Vector3<f64>, Vector3<f64>), CoreError> {
    let eta_dot = rot_z(state.yaw()).matrix() * state.nu;
    let rhs = params.b_matrix() * u_b - params.d * state.nu + extra;
    let nu_dot = params
        .mass_matrix()
        .lu()
        .solve(&rhs)
        .ok_or(CoreError::SingularMass("USV"))?;
    Ok((eta_dot, nu_dot))
}

/// Block-diagonal double integrator η̇ = A_u·η + B_u·u.
pub fn uav_derivative(state: &UavState, u_u: &Vector3<f64>, params: &UavParams) -> Vector6<f64> {
    let e = &state.eta;
    Vector6::new(
        params.a1 * e[1],
        params.b1 * u_u.x,
        params.a1 * e[3],
        params.b1 * u_u.y,
        params.a1 * e[5],
        params.b1 * u_u.z,
    )
}

/// Continuous stacked model ẋ = A·x + B·u in the vessel-parallel frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledLinearModel {
    pub a: StateMatrix,
    pub b: InputMatrix,
}

/// Assembles the coupled object/USV/UAV model. Object rotations are dropped, so the
/// object rows use the translational blocks of M⁻¹D and M⁻¹G, and the robot
/// accelerations enter the object acceleration directly (M·M⁻¹ cancels).
pub fn assemble_coupled_model(
    obj: &ObjectParams,
    usv: &UsvParams,
    uav: &UavParams,
) -> Result<CoupledLinearModel, CoreError> {
    use layout::*;
    obj.validate()?;
    usv.validate()?;
    uav.validate()?;

    let m_inv = obj
        .mass_matrix()
        .try_inverse()
        .ok_or(CoreError::SingularMass("object"))?;
    let md = (m_inv * obj.d).fixed_view::<3, 3>(0, 0).into_owned();
    let mg = (m_inv * obj.g).fixed_view::<3, 3>(0, 0).into_owned();
    let mb_inv = usv
        .mass_matrix()
        .try_inverse()
        .ok_or(CoreError::SingularMass("USV"))?;
    let usv_a = -mb_inv * usv.d;
    let usv_b = mb_inv * usv.b_matrix();

    let mut a = StateMatrix::zeros();
    let mut b = InputMatrix::zeros();
    a.fixed_view_mut::<3, 3>(P_O.start, V_O.start)
        .copy_from(&Matrix3::identity());
    a.fixed_view_mut::<3, 3>(V_O.start, V_O.start)
        .copy_from(&(-md));
    a.fixed_view_mut::<3, 3>(V_O.start, P_O.start)
        .copy_from(&(-mg));
    // planar USV acceleration (u̇_b, v̇_b, 0)
    a.fixed_view_mut::<2, 3>(V_O.start, NU_B.start)
        .copy_from(&usv_a.fixed_view::<2, 3>(0, 0));
    b.fixed_view_mut::<2, 2>(V_O.start, U_B.start)
        .copy_from(&usv_b.fixed_view::<2, 2>(0, 0));
    // UAV acceleration b1·u_u
    for axis in 0..3 {
        b[(V_O.start + axis, U_U.start + axis)] = uav.b1;
    }

    a.fixed_view_mut::<3, 3>(ETA_B.start, NU_B.start)
        .copy_from(&Matrix3::identity());
    a.fixed_view_mut::<3, 3>(NU_B.start, NU_B.start)
        .copy_from(&usv_a);
    b.fixed_view_mut::<3, 2>(NU_B.start, U_B.start)
        .copy_from(&usv_b);

    for axis in 0..3 {
        a[(UAV_POS[axis], UAV_VEL[axis])] = uav.a1;
        b[(UAV_VEL[axis], U_U.start + axis)] = uav.b1;
    }
    Ok(CoupledLinearModel { a, b })
}

/// Discrete model x⁺ = A_d·x + B_d·u.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    pub a_d: StateMatrix,
    pub b_d: InputMatrix,
    pub dt: f64,
}

/// Fourth-order Taylor (RK4-equivalent) discretization of a linear model.
pub fn discretize(model: &CoupledLinearModel, dt: f64) -> Result<DiscreteModel, CoreError> {
    if !(dt > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (a_d, b_d) = taylor4(&model.a, &model.b, dt);
    Ok(DiscreteModel { a_d, b_d, dt })
}

fn taylor4<const N: usize, const M: usize>(
    a: &SMatrix<f64, N, N>,
    b: &SMatrix<f64, N, M>,
    dt: f64,
) -> (SMatrix<f64, N, N>, SMatrix<f64, N, M>) {
    let id = SMatrix::<f64, N, N>::identity();
    let a1 = a * dt;
    let a2 = a1 * a1;
    let a3 = a2 * a1;
    let a4 = a3 * a1;
    let a_d = id + a1 + a2 / 2.0 + a3 / 6.0 + a4 / 24.0;
    let phi = (id + a1 / 2.0 + a2 / 6.0 + a3 / 24.0) * dt;
    (a_d, phi * b)
}

/// Planar USV acceleration predicted by the linear model's ν̇ rows.
pub fn usv_planar_accel(
    nu: &Vector3<f64>,
    u_b: &Vector2<f64>,
    params: &UsvParams,
) -> Option<Vector3<f64>> {
    let acc = params
        .mass_matrix()
        .lu()
        .solve(&(params.b_matrix() * u_b - params.d * nu))?;
    Some(Vector3::new(acc.x, acc.y, 0.0))
}
