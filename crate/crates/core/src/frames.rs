//! World, body and vessel-parallel frames.
//!
//! The world frame is east-north-up. The vessel-parallel frame P shares the
//! world origin and z axis and is rotated by the USV yaw.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix6, Vector3};

use crate::CoreError;

/// Distance from ±π/2 pitch at which the Euler-rate transform is refused.
pub const GIMBAL_MARGIN: f64 = 1e-6;

/// Yaw angle wrapped to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct YawAngle(f64);

impl YawAngle {
    pub fn new(psi: f64) -> Self {
        Self(wrap_angle(psi))
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<f64> for YawAngle {
    fn from(psi: f64) -> Self {
        Self::new(psi)
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(pub Matrix3<f64>);

impl Rotation3 {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn transpose(&self) -> Rotation3 {
        Rotation3(self.0.transpose())
    }
}

/// Intrinsic roll, pitch, yaw.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        Self { phi, theta, psi }
    }
}

/// Planar yaw rotation embedded in 3×3 (the USV kinematic matrix J_b).
pub fn rot_z(psi: YawAngle) -> Rotation3 {
    let (s, c) = psi.radians().sin_cos();
    Rotation3(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
}

/// Body-to-world rotation for intrinsic z-y-x (yaw, pitch, roll) angles.
pub fn rotation_zyx(angles: &EulerAngles) -> Rotation3 {
    let (sf, cf) = angles.phi.sin_cos();
    let (st, ct) = angles.theta.sin_cos();
    let (sp, cp) = angles.psi.sin_cos();
    Rotation3(Matrix3::new(
        cp * ct,
        -sp * cf + cp * st * sf,
        sp * sf + cp * cf * st,
        sp * ct,
        cp * cf + sf * st * sp,
        -cp * sf + st * sp * cf,
        -st,
        ct * sf,
        ct * cf,
    ))
}

/// Six-DOF kinematic transform J(η): linear velocity rotation and Euler-rate map.
pub fn euler_to_transform(angles: &EulerAngles) -> Result<Matrix6<f64>, CoreError> {
    if (angles.theta.abs() - PI / 2.0).abs() < GIMBAL_MARGIN || angles.theta.abs() > PI / 2.0 {
        return Err(CoreError::GimbalLock {
            theta: angles.theta,
        });
    }
    let r = rotation_zyx(angles);
    let (sf, cf) = angles.phi.sin_cos();
    let (ct, tt) = (angles.theta.cos(), angles.theta.tan());
    let t = Matrix3::new(1.0, sf * tt, cf * tt, 0.0, cf, -sf, 0.0, sf / ct, cf / ct);
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(r.matrix());
    j.fixed_view_mut::<3, 3>(3, 3).copy_from(&t);
    Ok(j)
}

/// World vector expressed in the vessel-parallel frame: J_bᵀ(ψ_b)·v.
pub fn to_vessel_parallel(v: &Vector3<f64>, psi_b: YawAngle) -> Vector3<f64> {
    rot_z(psi_b).matrix().transpose() * v
}

/// Inverse of [`to_vessel_parallel`].
pub fn from_vessel_parallel(v: &Vector3<f64>, psi_b: YawAngle) -> Vector3<f64> {
    rot_z(psi_b).matrix() * v
}
