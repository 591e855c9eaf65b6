use approx::assert_relative_eq;
use cotow_core::dynamics::{ObjectState, UavState, UsvState};
use cotow_core::plant::*;
use nalgebra::{Matrix3, Matrix6, SVector, Vector1, Vector2, Vector3};

#[test]
fn rk4_examples() {
    let x = SVector::<f64, 2>::new(1.0, -2.0);
    assert_eq!(rk4_step(|_, _| SVector::zeros(), 0.0, &x, 0.1), x);
    let y = rk4_step(|_, x| *x, 0.0, &Vector1::new(1.0), 0.1);
    assert!((y[0] - 0.1f64.exp()).abs() < 1e-7);
    assert!((y[0] - 1.105_170_833_333_333).abs() < 1e-14);
}

/// Least-squares slope of log(error) against log(dt) for ẋ = cos t.
#[test]
fn rk4_is_fourth_order_on_forced_problem() {
    let errs: Vec<(f64, f64)> = [0.4, 0.2, 0.1, 0.05]
        .iter()
        .map(|&dt| {
            let steps = (4.0 / dt) as usize;
            let mut x = Vector1::new(0.0);
            for k in 0..steps {
                x = rk4_step(|t, _| Vector1::new(t.cos()), k as f64 * dt, &x, dt);
            }
            (dt, (x[0] - 4.0f64.sin()).abs())
        })
        .collect();
    let slope = fit_slope(&errs);
    assert!((3.7..=4.3).contains(&slope), "slope {slope}");
}

pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn tether_force_examples() {
    let m = TetherModel { stiffness: 1e4, damping: 200.0, rest_length: 4.0 };
    let z = Vector3::zeros();
    assert_eq!(tether_force(&z, &z, &Vector3::new(3.9, 0.0, 0.0), &z, &m), z);
    let f = tether_force(&z, &z, &Vector3::new(4.01, 0.0, 0.0), &z, &m);
    assert_relative_eq!(f, Vector3::new(100.0, 0.0, 0.0), epsilon = 1e-9);
    // third law
    let (pa, va) = (Vector3::new(0.3, -1.0, 0.2), Vector3::new(0.1, 0.0, -0.2));
    let (pb, vb) = (Vector3::new(3.0, 2.5, 1.0), Vector3::new(-0.3, 0.4, 0.0));
    let fab = tether_force(&pa, &va, &pb, &vb, &m);
    let fba = tether_force(&pb, &vb, &pa, &va, &m);
    assert!(fab.norm() > 0.0);
    assert_relative_eq!(fab, -fba, epsilon = 1e-9);
}

#[test]
fn rest_state_with_slack_tethers_stays_put() {
    let p = PlantParams::default();
    let s = PlantState {
        uav: UavState::new(Vector3::new(0.0, 0.0, 2.0), Vector3::zeros()),
        usv: UsvState { eta: Vector3::new(3.0, 0.0, 0.0), nu: Vector3::zeros() },
        ..PlantState::default()
    };
    let next = p.step(&s, &Vector2::zeros(), &Vector3::zeros(), &[], 1e-3).unwrap();
    assert_eq!(next.object, s.object);
    assert_eq!(next.usv, s.usv);
    assert_eq!(next.uav, s.uav);
    assert_relative_eq!(next.t, 1e-3);
}

#[test]
fn disturbance_acts_only_inside_its_window() {
    let p = PlantParams { uav_attached: false, ..PlantParams::default() };
    let d = Disturbance { force: Vector3::new(0.0, 50.0, 0.0), t_start: 0.01, duration: 0.005 };
    let mut s = PlantState {
        usv: UsvState { eta: Vector3::new(2.0, 0.0, 0.0), nu: Vector3::zeros() },
        ..PlantState::default()
    };
    let mut pushed = Vec::new();
    for _ in 0..30 {
        let before = s.object.nu.y;
        s = p.step(&s, &Vector2::zeros(), &Vector3::zeros(), &[d], 1e-3).unwrap();
        pushed.push(s.object.nu.y > before);
    }
    let steps: Vec<usize> = pushed.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
    assert_eq!(steps, vec![10, 11, 12, 13, 14]);
}

#[test]
fn blowup_is_reported() {
    let p = PlantParams::default();
    let mut s = PlantState::default();
    s.object.nu.x = 2e6;
    assert!(matches!(
        p.step(&s, &Vector2::zeros(), &Vector3::zeros(), &[], 1e-3),
        Err(cotow_core::CoreError::NumericBlowup { .. })
    ));
}

fn energy(p: &PlantParams, s: &PlantState) -> f64 {
    let obj_m = p.object.mass_matrix();
    let kin_o = 0.5 * s.object.nu.dot(&(obj_m * s.object.nu));
    let pot_o = 0.5 * s.object.eta.dot(&(p.object.g * s.object.eta));
    let kin_b = 0.5 * s.usv.nu.dot(&(p.usv.mass_matrix() * s.usv.nu));
    let kin_u = 0.5 * p.uav_mass * s.uav.velocity().norm_squared();
    let r = p.tethers(s);
    let spring = |sep: f64, m: &TetherModel| 0.5 * m.stiffness * (sep - m.rest_length).max(0.0).powi(2);
    kin_o + pot_o + kin_b + kin_u + spring(r.usv_separation, &p.usv_tether) + spring(r.uav_separation, &p.uav_tether)
}

#[test]
fn undamped_plant_never_gains_energy() {
    let mut p = PlantParams::default();
    p.object.d = Matrix6::zeros();
    p.usv.d = Matrix3::zeros();
    p.quadratic_drag = 0.0;
    p.uav_compensation = 0.0;
    let mut s = PlantState {
        object: ObjectState::default(),
        usv: UsvState { eta: Vector3::new(5.0, 0.0, 0.0), nu: Vector3::new(1.5, 0.0, 0.1) },
        uav: UavState::new(Vector3::new(-4.0, 0.5, 3.0), Vector3::new(-0.5, 0.3, 0.2)),
        t: 0.0,
    };
    let mut e_prev = energy(&p, &s);
    for _second in 0..5 {
        for _ in 0..1000 {
            s = p.step(&s, &Vector2::zeros(), &Vector3::zeros(), &[], 1e-3).unwrap();
        }
        let e = energy(&p, &s);
        assert!(e <= e_prev * 1.001, "energy grew from {e_prev} to {e}");
        e_prev = e;
    }
    // the tethers did engage
    assert!(s.object.nu.fixed_rows::<3>(0).norm() > 0.01);
}
