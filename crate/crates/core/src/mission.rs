//! Reference paths for the towed object and the built-in missions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{Vector2, Vector3};
use rand::Rng;

use crate::dynamics::layout;
use crate::dynamics::StateVector;
use crate::mpc::ReferenceWindow;
use crate::plant::Disturbance;
use crate::CoreError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentKind {
    Line {
        start: Vector2<f64>,
        end: Vector2<f64>,
    },
    /// Circular arc; positive `sweep` turns counter-clockwise.
    Arc {
        center: Vector2<f64>,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

/// Path segment traversed at constant speed, m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment {
    pub kind: SegmentKind,
    pub speed: f64,
}

impl PathSegment {
    pub fn length(&self) -> f64 {
        match self.kind {
            SegmentKind::Line { start, end } => (end - start).norm(),
            SegmentKind::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.length() / self.speed
    }

    /// Position and velocity after `s` metres of travel, clamped to the segment.
    pub fn at_distance(&self, s: f64) -> (Vector2<f64>, Vector2<f64>) {
        let s = s.clamp(0.0, self.length());
        match self.kind {
            SegmentKind::Line { start, end } => {
                let len = (end - start).norm();
                if len == 0.0 {
                    return (start, Vector2::zeros());
                }
                let dir = (end - start) / len;
                (start + dir * s, dir * self.speed)
            }
            SegmentKind::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let sign = sweep.signum();
                let th = start_angle + sign * s / radius;
                let (sn, cs) = th.sin_cos();
                (
                    center + Vector2::new(cs, sn) * radius,
                    Vector2::new(-sn, cs) * (sign * self.speed),
                )
            }
        }
    }

    pub fn start_point(&self) -> Vector2<f64> {
        self.at_distance(0.0).0
    }

    pub fn end_point(&self) -> Vector2<f64> {
        self.at_distance(self.length()).0
    }

    /// Unit tangent at the end of the segment.
    pub fn end_tangent(&self) -> Vector2<f64> {
        let (_, v) = self.at_distance(self.length());
        v.try_normalize(1e-12).unwrap_or_else(Vector2::x)
    }
}

/// Reference position and velocity at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSample {
    pub t: f64,
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub name: String,
    pub segments: Vec<PathSegment>,
    pub disturbances: Vec<Disturbance>,
    /// Simulated time, s.
    pub duration: f64,
    /// Time to reach path speed from rest, s; the reference accelerates uniformly.
    pub ramp: f64,
}

impl MissionPlan {
    pub fn path_time(&self) -> f64 {
        self.segments.iter().map(PathSegment::duration).sum::<f64>() + 0.5 * self.ramp
    }

    /// Time along the full-speed path reached at `t`, and its rate.
    fn warp(&self, t: f64) -> (f64, f64) {
        let t = t.max(0.0);
        if t < self.ramp {
            (0.5 * t * t / self.ramp, t / self.ramp)
        } else {
            (t - 0.5 * self.ramp, 1.0)
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.segments.is_empty() {
            return Err(CoreError::InvalidParameter(format!(
                "mission '{}' has no segments",
                self.name
            )));
        }
        for s in &self.segments {
            let radius_ok = match s.kind {
                SegmentKind::Arc { radius, .. } => radius > 0.0,
                SegmentKind::Line { .. } => true,
            };
            if !(s.speed > 0.0) || !radius_ok || !s.length().is_finite() {
                return Err(CoreError::InvalidParameter(format!(
                    "mission '{}': bad segment {s:?}",
                    self.name
                )));
            }
        }
        if !(self.ramp >= 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "mission '{}': ramp {}",
                self.name, self.ramp
            )));
        }
        if !(self.duration > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "mission '{}': duration {}",
                self.name, self.duration
            )));
        }
        Ok(())
    }

    pub fn start_point(&self) -> Vector2<f64> {
        self.segments
            .first()
            .map(PathSegment::start_point)
            .unwrap_or_default()
    }

    /// Unit tangent at the start of the path.
    pub fn start_tangent(&self) -> Vector2<f64> {
        self.segments
            .first()
            .and_then(|s| s.at_distance(0.0).1.try_normalize(1e-12))
            .unwrap_or_else(Vector2::x)
    }
}

/// Reference at time `t`; before the start it holds the first point, after the
/// end it holds the final point with zero velocity.
pub fn sample_reference(plan: &MissionPlan, t: f64) -> RefSample {
    let (mut rem, rate) = plan.warp(t);
    for seg in &plan.segments {
        let d = seg.duration();
        if rem < d {
            let (p, v) = seg.at_distance(rem * seg.speed);
            return RefSample {
                t,
                p: Vector3::new(p.x, p.y, 0.0),
                v: Vector3::new(v.x, v.y, 0.0) * rate,
            };
        }
        rem -= d;
    }
    let end = plan
        .segments
        .last()
        .map(PathSegment::end_point)
        .unwrap_or_default();
    RefSample {
        t,
        p: Vector3::new(end.x, end.y, 0.0),
        v: Vector3::zeros(),
    }
}

/// Object references at t, t + dt, …, t + (n−1)·dt. Robot slots stay zero for
/// the guidance layer to fill.
pub fn build_reference_window(plan: &MissionPlan, t: f64, n: usize, dt: f64) -> ReferenceWindow {
    let x_r = (0..n)
        .map(|k| {
            let s = sample_reference(plan, t + k as f64 * dt);
            let mut x = StateVector::zeros();
            x.fixed_rows_mut::<3>(layout::P_O.start).copy_from(&s.p);
            x.fixed_rows_mut::<3>(layout::V_O.start).copy_from(&s.v);
            x
        })
        .collect();
    ReferenceWindow { x_r }
}

/// Tunables shared by the built-in missions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionOptions {
    pub speed: f64,
    pub circle_radius: f64,
    pub line_length: f64,
    pub disturbance_force: f64,
    pub disturbance_start: f64,
    pub disturbance_duration: f64,
    /// Extra simulated time after the path ends, s.
    pub settle_time: f64,
    /// Uniform acceleration phase at the start, s.
    pub ramp: f64,
}

impl Default for MissionOptions {
    fn default() -> Self {
        Self {
            speed: 1.0,
            circle_radius: 20.0,
            line_length: 50.0,
            disturbance_force: 1000.0,
            disturbance_start: 7.0,
            disturbance_duration: 0.5,
            settle_time: 0.0,
            ramp: 0.0,
        }
    }
}

pub trait MissionBuilder: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn build(&self, opts: &MissionOptions) -> MissionPlan;
}

fn circle_segment(opts: &MissionOptions) -> PathSegment {
    PathSegment {
        kind: SegmentKind::Arc {
            center: Vector2::zeros(),
            radius: opts.circle_radius,
            start_angle: -PI / 2.0,
            sweep: 2.0 * PI,
        },
        speed: opts.speed,
    }
}

fn plan(
    name: &str,
    segments: Vec<PathSegment>,
    disturbances: Vec<Disturbance>,
    opts: &MissionOptions,
) -> MissionPlan {
    let duration = segments.iter().map(PathSegment::duration).sum::<f64>() + 0.5 * opts.ramp + opts.settle_time;
    MissionPlan {
        name: name.to_owned(),
        segments,
        disturbances,
        duration,
        ramp: opts.ramp,
    }
}

/// One counter-clockwise lap around the origin, starting due south.
#[derive(Debug, Clone, Copy, Default)]
pub struct CircleMission;

impl MissionBuilder for CircleMission {
    fn name(&self) -> &'static str {
        "circle"
    }

    fn build(&self, opts: &MissionOptions) -> MissionPlan {
        plan(self.name(), vec![circle_segment(opts)], Vec::new(), opts)
    }
}

/// Straight run east from the origin.
#[derive(Debug, Clone, Copy, Default)]
pub struct LineMission;

impl MissionBuilder for LineMission {
    fn name(&self) -> &'static str {
        "line"
    }

    fn build(&self, opts: &MissionOptions) -> MissionPlan {
        let seg = PathSegment {
            kind: SegmentKind::Line {
                start: Vector2::zeros(),
                end: Vector2::new(opts.line_length, 0.0),
            },
            speed: opts.speed,
        };
        plan(self.name(), vec![seg], Vec::new(), opts)
    }
}

/// The circle with an outward impulse on the object.
#[derive(Debug, Clone, Copy, Default)]
pub struct DisturbanceMission;

impl MissionBuilder for DisturbanceMission {
    fn name(&self) -> &'static str {
        "disturbance"
    }

    fn build(&self, opts: &MissionOptions) -> MissionPlan {
        let seg = circle_segment(opts);
        let (p, _) = seg.at_distance(opts.disturbance_start * opts.speed);
        let outward = p.try_normalize(1e-12).unwrap_or_else(Vector2::x) * opts.disturbance_force;
        let d = Disturbance {
            force: Vector3::new(outward.x, outward.y, 0.0),
            t_start: opts.disturbance_start,
            duration: opts.disturbance_duration,
        };
        plan(self.name(), vec![seg], vec![d], opts)
    }
}

#[derive(Debug, Clone)]
pub struct MissionRegistry {
    entries: BTreeMap<&'static str, Arc<dyn MissionBuilder>>,
}

impl MissionRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, builder: Arc<dyn MissionBuilder>) {
        self.entries.insert(builder.name(), builder);
    }

    pub fn build(&self, name: &str, opts: &MissionOptions) -> Result<MissionPlan, CoreError> {
        let b = self.entries.get(name).ok_or_else(|| CoreError::Unknown {
            kind: "mission",
            name: name.to_owned(),
            known: self.names().join(", "),
        })?;
        let plan = b.build(opts);
        plan.validate()?;
        Ok(plan)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for MissionRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(CircleMission));
        r.register(Arc::new(LineMission));
        r.register(Arc::new(DisturbanceMission));
        r
    }
}

/// Built-in missions keyed by name.
pub fn builtin_missions(opts: &MissionOptions) -> BTreeMap<String, MissionPlan> {
    let reg = MissionRegistry::default();
    reg.names()
        .into_iter()
        .map(|n| {
            (
                n.to_owned(),
                reg.build(n, opts).expect("built-in missions are valid"),
            )
        })
        .collect()
}

/// Bounds for randomly generated plans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomPlanSpec {
    pub segments: (usize, usize),
    pub radius: (f64, f64),
    pub length: (f64, f64),
    pub speed: f64,
    pub ramp: f64,
}

impl Default for RandomPlanSpec {
    fn default() -> Self {
        Self {
            segments: (2, 5),
            radius: (10.0, 30.0),
            length: (20.0, 60.0),
            speed: 1.0,
            ramp: 0.0,
        }
    }
}

/// Tangent-continuous chain of lines and arcs starting at the origin.
/// Arc lengths are drawn from the same range as line lengths and capped at a half turn.
pub fn random_plan<R: Rng + ?Sized>(rng: &mut R, spec: &RandomPlanSpec, name: &str) -> MissionPlan {
    let count = rng.random_range(spec.segments.0..=spec.segments.1);
    let mut pos = Vector2::zeros();
    let mut heading: f64 = rng.random_range(-PI..PI);
    let mut segments = Vec::with_capacity(count);
    for _ in 0..count {
        let len = rng.random_range(spec.length.0..=spec.length.1);
        let kind = if rng.random_bool(0.5) {
            let end = pos + Vector2::new(heading.cos(), heading.sin()) * len;
            SegmentKind::Line { start: pos, end }
        } else {
            let radius = rng.random_range(spec.radius.0..=spec.radius.1);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let sweep = sign * (len / radius).min(PI);
            // centre lies on the turning side of the current heading
            let normal = Vector2::new(-heading.sin(), heading.cos()) * sign;
            let center = pos + normal * radius;
            let start_angle = (pos.y - center.y).atan2(pos.x - center.x);
            SegmentKind::Arc {
                center,
                radius,
                start_angle,
                sweep,
            }
        };
        let seg = PathSegment {
            kind,
            speed: spec.speed,
        };
        pos = seg.end_point();
        let t = seg.end_tangent();
        heading = t.y.atan2(t.x);
        segments.push(seg);
    }
    let duration = segments.iter().map(PathSegment::duration).sum::<f64>() + 0.5 * spec.ramp;
    MissionPlan {
        name: name.to_owned(),
        segments,
        disturbances: Vec::new(),
        duration,
        ramp: spec.ramp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circle_starts_south_heading_east() {
        let p = CircleMission.build(&MissionOptions::default());
        let s = sample_reference(&p, 0.0);
        assert_relative_eq!(s.p, Vector3::new(0.0, -20.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(s.v, Vector3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(p.duration, 40.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn holds_final_point() {
        let p = LineMission.build(&MissionOptions::default());
        let s = sample_reference(&p, 1e3);
        assert_relative_eq!(s.p, Vector3::new(50.0, 0.0, 0.0));
        assert_eq!(s.v, Vector3::zeros());
    }

    #[test]
    fn disturbance_points_outward() {
        let p = DisturbanceMission.build(&MissionOptions::default());
        let d = p.disturbances[0];
        let at = sample_reference(&p, 7.0).p;
        assert_relative_eq!(d.force.norm(), 1000.0, epsilon = 1e-9);
        assert!(d.force.dot(&at) > 0.0);
        assert!(d.force.dot(&sample_reference(&p, 7.0).v).abs() < 1e-9);
    }

    #[test]
    fn random_plans_are_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_plan(&mut rng, &RandomPlanSpec::default(), "r");
            p.validate().unwrap();
            for w in p.segments.windows(2) {
                assert_relative_eq!(w[0].end_point(), w[1].start_point(), epsilon = 1e-9);
                let t1 = w[1].at_distance(0.0).1.normalize();
                assert_relative_eq!(w[0].end_tangent(), t1, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn unknown_mission() {
        let r = MissionRegistry::default();
        assert!(matches!(
            r.build("spiral", &MissionOptions::default()),
            Err(CoreError::Unknown { .. })
        ));
    }
}
