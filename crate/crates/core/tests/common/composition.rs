//! Independent assembly of the coupled model from the per-body derivatives.

use cotow_core::dynamics::layout::*;
use cotow_core::dynamics::*;
use nalgebra::{Vector2, Vector3, Vector6};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_params(rng: &mut ChaCha8Rng) -> (ObjectParams, UsvParams, UavParams) {
    let obj = ObjectParams::sphere(
        rng.random_range(0.1..0.5),
        rng.random_range(1.0..20.0),
        std::array::from_fn(|_| rng.random_range(0.0..40.0)),
    );
    let usv = UsvParams::diagonal(
        rng.random_range(50.0..400.0),
        rng.random_range(20.0..300.0),
        rng.random_range(0.0..0.5),
        std::array::from_fn(|_| rng.random_range(1.0..500.0)),
        rng.random_range(0.5..3.0),
        250.0,
    );
    let uav = UavParams {
        a1: rng.random_range(0.5..2.0),
        b1: rng.random_range(0.5..2.0),
        ..UavParams::default()
    };
    (obj, usv, uav)
}

/// Per-body derivatives glued together through the tether wrench: the object
/// feels the robots' accelerations and nothing else from them.
pub fn composed_derivative(
    x: &StateVector,
    u: &InputVector,
    obj: &ObjectParams,
    usv: &UsvParams,
    uav: &UavParams,
) -> StateVector {
    let usv_state = UsvState {
        eta: x.fixed_rows::<3>(ETA_B.start).into_owned(),
        nu: x.fixed_rows::<3>(NU_B.start).into_owned(),
    };
    let (_, nu_b_dot) = usv_derivative(&usv_state, &Vector2::new(u[0], u[1]), usv).unwrap();
    let uav_state = UavState { eta: x.fixed_rows::<6>(ETA_U.start).into_owned() };
    let eta_u_dot = uav_derivative(&uav_state, &Vector3::new(u[2], u[3], u[4]), uav);
    let uav_accel = Vector3::new(eta_u_dot[1], eta_u_dot[3], eta_u_dot[5]);
    let usv_accel = Vector3::new(nu_b_dot.x, nu_b_dot.y, 0.0);
    let (_, _, tau_o) = tether_wrench(&uav_accel, &usv_accel, obj);

    let p = x.fixed_rows::<3>(P_O.start);
    let v = x.fixed_rows::<3>(V_O.start);
    let object = ObjectState {
        eta: Vector6::new(p[0], p[1], p[2], 0.0, 0.0, 0.0),
        nu: Vector6::new(v[0], v[1], v[2], 0.0, 0.0, 0.0),
    };
    let (eta_o_dot, nu_o_dot) = object_derivative(&object, &tau_o, obj).unwrap();

    let mut dx = StateVector::zeros();
    dx.fixed_rows_mut::<3>(P_O.start).copy_from(&eta_o_dot.fixed_rows::<3>(0));
    dx.fixed_rows_mut::<3>(V_O.start).copy_from(&nu_o_dot.fixed_rows::<3>(0));
    // in the vessel-parallel frame the pose rate is the body velocity
    dx.fixed_rows_mut::<3>(ETA_B.start).copy_from(&usv_state.nu);
    dx.fixed_rows_mut::<3>(NU_B.start).copy_from(&nu_b_dot);
    dx.fixed_rows_mut::<6>(ETA_U.start).copy_from(&eta_u_dot);
    dx
}
