use std::f64::consts::PI;

use approx::assert_relative_eq;
use cotow_core::dynamics::layout::{P_O, V_O};
use cotow_core::mission::*;
use nalgebra::{Vector2, Vector3};
use proptest::prelude::*;

fn circle() -> MissionPlan {
    MissionRegistry::default().build("circle", &MissionOptions::default()).unwrap()
}

#[test]
fn quarter_lap() {
    let s = sample_reference(&circle(), 10.0 * PI);
    assert_relative_eq!(s.p, Vector3::new(20.0, 0.0, 0.0), epsilon = 1e-9);
    assert_relative_eq!(s.v, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-9);
}

#[test]
fn window_samples_are_spaced_by_dt() {
    let plan = MissionRegistry::default().build("line", &MissionOptions::default()).unwrap();
    let w = build_reference_window(&plan, 3.0, 10, 0.1);
    assert_eq!(w.x_r.len(), 10);
    for (k, x) in w.x_r.iter().enumerate() {
        assert_relative_eq!(x[P_O.start], 3.0 + 0.1 * k as f64, epsilon = 1e-12);
        assert_relative_eq!(x[V_O.start], 1.0, epsilon = 1e-12);
        assert!(x.rows(6, 12).iter().all(|v| *v == 0.0));
    }
}

#[test]
fn ramp_accelerates_uniformly() {
    let opts = MissionOptions { ramp: 4.0, ..MissionOptions::default() };
    let plan = MissionRegistry::default().build("line", &opts).unwrap();
    let s = sample_reference(&plan, 2.0);
    // v = t/T·v_max, x = ½t²/T·v_max
    assert_relative_eq!(s.v.x, 0.5, epsilon = 1e-12);
    assert_relative_eq!(s.p.x, 0.5, epsilon = 1e-12);
    let after = sample_reference(&plan, 6.0);
    assert_relative_eq!(after.v.x, 1.0, epsilon = 1e-12);
    assert_relative_eq!(after.p.x, 4.0, epsilon = 1e-12);
    assert_relative_eq!(plan.path_time(), 52.0, epsilon = 1e-12);
}

#[test]
fn registry_names() {
    assert_eq!(MissionRegistry::default().names(), vec!["circle", "disturbance", "line"]);
    let all = builtin_missions(&MissionOptions::default());
    assert_eq!(all.len(), 3);
    assert_eq!(all["disturbance"].disturbances.len(), 1);
    assert!(all["circle"].disturbances.is_empty());
}

#[test]
fn invalid_plans_are_rejected() {
    let mut p = circle();
    p.segments[0].speed = 0.0;
    assert!(p.validate().is_err());
    let mut p = circle();
    p.segments.clear();
    assert!(p.validate().is_err());
}

proptest! {
    #[test]
    fn circle_reference_stays_on_the_circle(t in 0.0f64..125.0) {
        let s = sample_reference(&circle(), t);
        prop_assert!((s.p.xy().norm() - 20.0).abs() < 1e-9);
        prop_assert!((s.v.norm() - 1.0).abs() < 1e-9);
        prop_assert!(s.p.xy().dot(&s.v.xy()).abs() < 1e-9);
    }

    #[test]
    fn reference_is_speed_lipschitz(t in 0.0f64..130.0, h in 1e-4f64..2.0) {
        let a = sample_reference(&circle(), t).p;
        let b = sample_reference(&circle(), t + h).p;
        prop_assert!((b - a).norm() <= h * 1.0 + 1e-9);
    }

    #[test]
    fn line_reference_moves_east(t in 0.0f64..60.0) {
        let plan = MissionRegistry::default().build("line", &MissionOptions::default()).unwrap();
        let s = sample_reference(&plan, t);
        prop_assert!((s.p.xy() - Vector2::new(t.min(50.0), 0.0)).norm() < 1e-12);
    }
}
