use std::f64::consts::PI;

use approx::assert_relative_eq;
use cotow_core::frames::*;
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn rx(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn ry(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rz(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[test]
fn zyx_matches_elementary_product() {
    let r = rotation_zyx(&EulerAngles::new(0.1, 0.2, 0.3));
    assert_relative_eq!(*r.matrix(), rz(0.3) * ry(0.2) * rx(0.1), epsilon = 1e-14);
}

#[test]
fn euler_rates_of_pure_yaw_rate() {
    // body yaw rate with zero roll/pitch is a pure ψ̇
    let j = euler_to_transform(&EulerAngles::new(0.0, 0.0, 1.0)).unwrap();
    let w = j.fixed_view::<3, 3>(3, 3) * Vector3::z();
    assert_relative_eq!(w, Vector3::z(), epsilon = 1e-15);
}

#[test]
fn vessel_parallel_half_turn() {
    let v = to_vessel_parallel(&Vector3::new(1.0, 2.0, 3.0), YawAngle::new(PI));
    assert_relative_eq!(v, Vector3::new(-1.0, -2.0, 3.0), epsilon = 1e-14);
}

proptest! {
    #[test]
    fn rotations_are_isometries(phi in -3.0f64..3.0, theta in -1.5f64..1.5, psi in -3.0f64..3.0,
                                x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
        let r = rotation_zyx(&EulerAngles::new(phi, theta, psi));
        let v = Vector3::new(x, y, z);
        prop_assert!((r.apply(&v).norm() - v.norm()).abs() < 1e-10);
        prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
        prop_assert!((r.transpose().apply(&r.apply(&v)) - v).norm() < 1e-10);
    }

    #[test]
    fn vessel_parallel_round_trip(psi in -10.0f64..10.0, x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
        let v = Vector3::new(x, y, z);
        let back = from_vessel_parallel(&to_vessel_parallel(&v, psi.into()), psi.into());
        prop_assert!((back - v).norm() < 1e-10);
        prop_assert!((to_vessel_parallel(&v, psi.into()).z - z).abs() == 0.0);
    }

    #[test]
    fn wrapped_yaw_is_the_same_direction(psi in -50.0f64..50.0) {
        let w = YawAngle::new(psi).radians();
        prop_assert!(w > -PI && w <= PI);
        prop_assert!((w.sin() - psi.sin()).abs() < 1e-9 && (w.cos() - psi.cos()).abs() < 1e-9);
    }
}
