//! Experiment configuration files.
//!
//! Files are TOML. Every table is optional and every key inside it overrides one
//! default, so a config can be as short as `mission = "circle"`. Dotted keys
//! (`mpc.horizon = 20`) and tables (`[mpc]`) are interchangeable. SI units throughout.

use std::path::Path;
use std::sync::Arc;

use cotow_core::dynamics::layout::{NU, NX};
use cotow_core::dynamics::{ObjectParams, TetherSpec, UsvParams};
use cotow_core::mission::{MissionOptions, MissionPlan, MissionRegistry, PathSegment, RandomPlanSpec, SegmentKind};
use cotow_core::mpc::MpcConfig;
use cotow_core::plant::Disturbance;
use cotow_core::strategy::{StrategyRegistry, TowStrategy};
use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::DEFAULT_SKIP;
use crate::runner::{AltitudeStep, ExperimentSetup};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Registered mission name; ignored when `plan` is given.
    pub mission: Option<String>,
    /// Inline mission, used instead of a named one.
    pub plan: Option<PlanConfig>,
    /// Strategy name, "multi" when absent.
    pub mode: Option<String>,
    /// Seed of the campaign trajectory stream. The simulation itself has no randomness.
    pub seed: u64,
    /// Simulated time, s; the plan's own duration when absent.
    pub duration: Option<f64>,
    /// Approach window excluded from the headline mean, s.
    pub skip: Option<f64>,
    pub mission_options: MissionOptionsConfig,
    pub object: ObjectConfig,
    pub usv: UsvConfig,
    pub uav: UavConfig,
    pub tether: TetherConfig,
    pub mpc: MpcOverrides,
    pub solver: SolverConfig,
    pub usv_gains: UsvGainsConfig,
    pub uav_gains: UavGainsConfig,
    pub guidance: GuidanceOverrides,
    pub scheduler: SchedulerConfig,
    pub campaign: CampaignConfig,
    pub inject: InjectConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub segments: Vec<SegmentConfig>,
    pub disturbances: Vec<DisturbanceConfig>,
    /// Extra simulated time after the path ends, s.
    pub settle_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SegmentConfig {
    Line {
        start: [f64; 2],
        end: [f64; 2],
        speed: f64,
    },
    /// Angles in rad; positive sweep is counter-clockwise.
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: f64,
        sweep: f64,
        speed: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    pub force: [f64; 3],
    pub t_start: f64,
    pub duration: f64,
}

macro_rules! overrides {
    ($(#[$m:meta])* $name:ident { $($(#[$fm:meta])* $field:ident: $ty:ty),* $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $($(#[$fm])* pub $field: Option<$ty>,)*
        }
    };
}

overrides!(MissionOptionsConfig {
    speed: f64,
    circle_radius: f64,
    line_length: f64,
    disturbance_force: f64,
    disturbance_start: f64,
    disturbance_duration: f64,
    settle_time: f64,
});

overrides!(
    /// The object is a half-submerged sphere.
    ObjectConfig {
        radius: f64,
        mass: f64,
        /// Linear damping, surge to yaw.
        damping: [f64; 6],
        /// Quadratic translational drag of the truth plant, N/(m/s)².
        quadratic_drag: f64,
    }
);

overrides!(UsvConfig {
    mass: f64,
    yaw_inertia: f64,
    /// Added mass as a fraction of the rigid-body inertia.
    added_fraction: f64,
    damping: [f64; 3],
    /// Thruster separation, m.
    d_tau: f64,
    tau_max: f64,
    /// Tether attachment point in the body frame.
    attach: [f64; 2],
});

overrides!(UavConfig {
    a1: f64,
    b1: f64,
    u_max: f64,
    v_max: f64,
    mass: f64,
    /// Tether force the autopilot cancels with spare thrust, N.
    compensation: f64,
});

overrides!(TetherConfig {
    l_usv: f64,
    l_uav: f64,
    epsilon: f64,
    stiffness: f64,
    damping: f64,
});

overrides!(MpcOverrides {
    horizon: usize,
    dt: f64,
    q: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
    eps_floor: f64,
});

overrides!(SolverConfig {
    rho: f64,
    sigma: f64,
    alpha: f64,
    eps_abs: f64,
    eps_rel: f64,
    eps_prim_inf: f64,
    eps_dual_inf: f64,
    max_iter: usize,
    adaptive_rho_interval: usize,
    scaling_iters: usize,
    polish: bool,
});

overrides!(UsvGainsConfig { kp_surge: f64, kd_surge: f64, kp_yaw: f64, kd_yaw: f64 });

overrides!(UavGainsConfig { kp: f64, kd: f64 });

overrides!(GuidanceOverrides {
    lookahead: f64,
    uav_altitude: f64,
    uav_radius: f64,
    uav_bearing: f64,
    usv_standoff: f64,
    min_distance: f64,
    uav_follow_object: bool,
});

overrides!(SchedulerConfig {
    plant_dt: f64,
    inner_every: usize,
    mpc_every: usize,
    pretension: f64,
    uav_tension_target: f64,
    uav_tension_gain: f64,
});

overrides!(
    /// Fault injection for monitor checks. Both fields are needed to arm the step.
    InjectConfig {
        uav_z_step_time: f64,
        uav_z_step_height: f64,
    }
);

overrides!(CampaignConfig {
    pairs: usize,
    min_segments: usize,
    max_segments: usize,
    min_radius: f64,
    max_radius: f64,
    min_length: f64,
    max_length: f64,
    speed: f64,
});

fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
    if let Some(v) = src {
        *dst = v.clone();
    }
}

fn array<const N: usize>(name: &str, v: &Option<Vec<f64>>, dst: &mut [f64; N]) -> Result<(), ConfigError> {
    if let Some(v) = v {
        *dst = v
            .as_slice()
            .try_into()
            .map_err(|_| invalid(format!("{name} needs {N} entries, got {}", v.len())))?;
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn mode_name(&self) -> &str {
        self.mode.as_deref().unwrap_or("multi")
    }

    pub fn skip(&self) -> f64 {
        self.skip.unwrap_or(DEFAULT_SKIP)
    }

    pub fn strategy(&self, registry: &StrategyRegistry) -> Result<Arc<dyn TowStrategy>, ConfigError> {
        registry.get(self.mode_name()).map_err(|e| invalid(e.to_string()))
    }

    pub fn mission_options(&self) -> MissionOptions {
        let m = &self.mission_options;
        let mut o = MissionOptions::default();
        set(&mut o.speed, &m.speed);
        set(&mut o.circle_radius, &m.circle_radius);
        set(&mut o.line_length, &m.line_length);
        set(&mut o.disturbance_force, &m.disturbance_force);
        set(&mut o.disturbance_start, &m.disturbance_start);
        set(&mut o.disturbance_duration, &m.disturbance_duration);
        set(&mut o.settle_time, &m.settle_time);
        o
    }

    /// The inline plan when present, else the named mission.
    pub fn mission_plan(&self, registry: &MissionRegistry) -> Result<MissionPlan, ConfigError> {
        let plan = match (&self.plan, &self.mission) {
            (Some(p), _) => p.to_plan("inline")?,
            (None, Some(name)) => registry
                .build(name, &self.mission_options())
                .map_err(|e| invalid(e.to_string()))?,
            (None, None) => return Err(invalid("either `mission` or `plan` is required")),
        };
        plan.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(plan)
    }

    pub fn random_plan_spec(&self) -> RandomPlanSpec {
        let c = &self.campaign;
        let mut s = RandomPlanSpec::default();
        set(&mut s.segments.0, &c.min_segments);
        set(&mut s.segments.1, &c.max_segments);
        set(&mut s.radius.0, &c.min_radius);
        set(&mut s.radius.1, &c.max_radius);
        set(&mut s.length.0, &c.min_length);
        set(&mut s.length.1, &c.max_length);
        set(&mut s.speed, &c.speed);
        s
    }

    /// Builds a runnable setup for `plan` and `strategy` with every override applied.
    pub fn setup_for(&self, plan: MissionPlan, strategy: Arc<dyn TowStrategy>) -> Result<ExperimentSetup, ConfigError> {
        let mut s = ExperimentSetup::new(plan, strategy);
        if let Some(d) = self.duration {
            s.duration = d;
        }

        let o = &self.object;
        let base = ObjectParams::default();
        let radius = o.radius.unwrap_or(0.25);
        let mass = o.mass.unwrap_or(base.m_o);
        let damping = o.damping.unwrap_or_else(|| std::array::from_fn(|i| base.d[(i, i)]));
        if o.radius.is_some() || o.mass.is_some() || o.damping.is_some() {
            s.plant.object = ObjectParams::sphere(radius, mass, damping);
        }
        set(&mut s.plant.quadratic_drag, &o.quadratic_drag);

        let u = &self.usv;
        if u.mass.is_some() || u.yaw_inertia.is_some() || u.added_fraction.is_some() || u.damping.is_some() {
            let d = UsvParams::default();
            let m = d.m_i;
            s.plant.usv = UsvParams::diagonal(
                u.mass.unwrap_or(m[(0, 0)]),
                u.yaw_inertia.unwrap_or(m[(2, 2)]),
                u.added_fraction.unwrap_or(d.m_a[(0, 0)] / m[(0, 0)]),
                u.damping.unwrap_or([d.d[(0, 0)], d.d[(1, 1)], d.d[(2, 2)]]),
                d.d_tau,
                d.tau_max,
            );
        }
        set(&mut s.plant.usv.d_tau, &u.d_tau);
        set(&mut s.plant.usv.tau_max, &u.tau_max);
        if let Some(a) = u.attach {
            s.plant.usv_attach = Vector2::new(a[0], a[1]);
        }

        let a = &self.uav;
        set(&mut s.plant.uav.a1, &a.a1);
        set(&mut s.plant.uav.b1, &a.b1);
        set(&mut s.plant.uav.u_max, &a.u_max);
        set(&mut s.plant.uav.v_max, &a.v_max);
        set(&mut s.plant.uav_mass, &a.mass);
        set(&mut s.plant.uav_compensation, &a.compensation);

        let t = &self.tether;
        let mut spec = TetherSpec::default();
        set(&mut spec.l_usv, &t.l_usv);
        set(&mut spec.l_uav, &t.l_uav);
        set(&mut spec.epsilon, &t.epsilon);
        for m in [&mut s.plant.usv_tether, &mut s.plant.uav_tether] {
            set(&mut m.stiffness, &t.stiffness);
            set(&mut m.damping, &t.damping);
        }
        s.plant.usv_tether.rest_length = spec.l_usv;
        s.plant.uav_tether.rest_length = spec.l_uav;

        // actuator limits feed the default bounds, so rebuild before overriding
        let mut mpc = MpcConfig::with_limits(&s.plant.usv, &s.plant.uav, spec);
        let m = &self.mpc;
        set(&mut mpc.n, &m.horizon);
        set(&mut mpc.dt, &m.dt);
        array::<NX>("mpc.q", &m.q, &mut mpc.q)?;
        array::<NU>("mpc.r", &m.r, &mut mpc.r)?;
        array::<NX>("mpc.s", &m.s, &mut mpc.s)?;
        set(&mut mpc.eps_floor, &m.eps_floor);
        let v = &self.solver;
        let sv = &mut mpc.solver;
        set(&mut sv.rho, &v.rho);
        set(&mut sv.sigma, &v.sigma);
        set(&mut sv.alpha, &v.alpha);
        set(&mut sv.eps_abs, &v.eps_abs);
        set(&mut sv.eps_rel, &v.eps_rel);
        set(&mut sv.eps_prim_inf, &v.eps_prim_inf);
        set(&mut sv.eps_dual_inf, &v.eps_dual_inf);
        set(&mut sv.max_iter, &v.max_iter);
        set(&mut sv.adaptive_rho_interval, &v.adaptive_rho_interval);
        set(&mut sv.scaling_iters, &v.scaling_iters);
        set(&mut sv.polish, &v.polish);
        s.mpc = mpc;

        let g = &self.usv_gains;
        set(&mut s.usv_gains.kp_surge, &g.kp_surge);
        set(&mut s.usv_gains.kd_surge, &g.kd_surge);
        set(&mut s.usv_gains.kp_yaw, &g.kp_yaw);
        set(&mut s.usv_gains.kd_yaw, &g.kd_yaw);
        set(&mut s.uav_gains.kp, &self.uav_gains.kp);
        set(&mut s.uav_gains.kd, &self.uav_gains.kd);

        let g = &self.guidance;
        let gd = &mut s.guidance;
        set(&mut gd.lookahead, &g.lookahead);
        set(&mut gd.uav_altitude, &g.uav_altitude);
        set(&mut gd.uav_radius, &g.uav_radius);
        set(&mut gd.uav_bearing, &g.uav_bearing);
        set(&mut gd.usv_standoff, &g.usv_standoff);
        set(&mut gd.min_distance, &g.min_distance);
        set(&mut gd.uav_follow_object, &g.uav_follow_object);

        let c = &self.scheduler;
        set(&mut s.plant_dt, &c.plant_dt);
        set(&mut s.inner_every, &c.inner_every);
        set(&mut s.mpc_every, &c.mpc_every);
        set(&mut s.pretension, &c.pretension);
        set(&mut s.uav_tension_target, &c.uav_tension_target);
        set(&mut s.uav_tension_gain, &c.uav_tension_gain);

        let inj = &self.inject;
        s.uav_z_step = match (inj.uav_z_step_time, inj.uav_z_step_height) {
            (Some(t), Some(dz)) => Some(AltitudeStep { t, dz }),
            (None, None) => None,
            _ => return Err(invalid("inject needs both uav_z_step_time and uav_z_step_height")),
        };

        s.validate()?;
        Ok(s)
    }

    /// Resolves mission and mode and builds the setup.
    pub fn build(&self) -> Result<ExperimentSetup, ConfigError> {
        let plan = self.mission_plan(&MissionRegistry::default())?;
        let strategy = self.strategy(&StrategyRegistry::default())?;
        self.setup_for(plan, strategy)
    }
}

impl PlanConfig {
    pub fn to_plan(&self, name: &str) -> Result<MissionPlan, ConfigError> {
        let segments: Vec<PathSegment> = self
            .segments
            .iter()
            .map(|s| match *s {
                SegmentConfig::Line { start, end, speed } => PathSegment {
                    kind: SegmentKind::Line { start: start.into(), end: end.into() },
                    speed,
                },
                SegmentConfig::Arc { center, radius, start_angle, sweep, speed } => PathSegment {
                    kind: SegmentKind::Arc { center: center.into(), radius, start_angle, sweep },
                    speed,
                },
            })
            .collect();
        let disturbances = self
            .disturbances
            .iter()
            .map(|d| Disturbance { force: Vector3::from(d.force), t_start: d.t_start, duration: d.duration })
            .collect();
        let duration = segments.iter().map(PathSegment::duration).sum::<f64>() + self.settle_time;
        if !(self.settle_time >= 0.0) {
            return Err(invalid("plan.settle_time must be non-negative"));
        }
        Ok(MissionPlan { name: name.to_owned(), segments, disturbances, duration, ramp: 0.0 })
    }
}

impl ExperimentSetup {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let core = |r: Result<(), cotow_core::CoreError>| r.map_err(|e| invalid(e.to_string()));
        core(self.plant.object.validate())?;
        core(self.plant.usv.validate())?;
        core(self.plant.uav.validate())?;
        core(self.mpc.validate())?;
        core(self.plan.validate())?;
        if !(self.duration >= 0.0) {
            return Err(invalid(format!("duration {}", self.duration)));
        }
        if !(self.plant_dt > 0.0) || self.inner_every == 0 || self.mpc_every == 0 {
            return Err(invalid("scheduler rates must be positive"));
        }
        let mpc_period = self.plant_dt * (self.inner_every * self.mpc_every) as f64;
        if (mpc_period - self.mpc.dt).abs() > 1e-9 {
            return Err(invalid(format!(
                "MPC runs every {mpc_period} s but predicts with dt = {} s",
                self.mpc.dt
            )));
        }
        let tethers = [&self.plant.usv_tether, &self.plant.uav_tether];
        if !tethers.iter().all(|t| t.stiffness > 0.0 && t.damping >= 0.0) {
            return Err(invalid("tether stiffness must be positive and damping non-negative"));
        }
        if !(self.guidance.uav_altitude > 0.0 && self.guidance.uav_altitude < self.mpc.tether.l_uav) {
            return Err(invalid("guidance.uav_altitude must lie in (0, tether.l_uav)"));
        }
        if !(self.pretension >= 0.0 && self.uav_tension_gain >= 0.0) {
            return Err(invalid("pretension and uav_tension_gain must be non-negative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = ExperimentConfig::from_toml("mission = \"circle\"").unwrap();
        let s = c.build().unwrap();
        assert_eq!(s.strategy.name(), "multi");
        assert_eq!(s.mpc, MpcConfig::default());
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let a = ExperimentConfig::from_toml("mission = \"line\"\nmpc.horizon = 12\nuav.u_max = 4.0").unwrap();
        let b = ExperimentConfig::from_toml("mission = \"line\"\n[mpc]\nhorizon = 12\n[uav]\nu_max = 4.0").unwrap();
        assert_eq!(a, b);
        let s = a.build().unwrap();
        assert_eq!(s.mpc.n, 12);
        assert_eq!(s.mpc.u_max[2], 4.0);
    }

    #[test]
    fn rejects_typos_and_bad_values() {
        assert!(matches!(ExperimentConfig::from_toml("misson = \"circle\""), Err(ConfigError::Parse(_))));
        let bad = |t: &str| ExperimentConfig::from_toml(t).unwrap().build();
        assert!(matches!(bad("mission = \"spiral\""), Err(ConfigError::Invalid(_))));
        assert!(matches!(bad("mission = \"line\"\nmode = \"solo\""), Err(ConfigError::Invalid(_))));
        assert!(matches!(bad("mission = \"line\"\nmpc.r = [1.0]"), Err(ConfigError::Invalid(_))));
        assert!(matches!(bad("mission = \"line\"\nmpc.dt = 0.05"), Err(ConfigError::Invalid(_))));
        assert!(matches!(bad(""), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn inline_plan() {
        let c = ExperimentConfig::from_toml(
            r#"
            [[plan.segments]]
            kind = "line"
            start = [0.0, 0.0]
            end = [10.0, 0.0]
            speed = 1.0
            [[plan.disturbances]]
            force = [0.0, 100.0, 0.0]
            t_start = 2.0
            duration = 0.5
            "#,
        )
        .unwrap();
        let s = c.build().unwrap();
        assert_eq!(s.duration, 10.0);
        assert_eq!(s.plan.disturbances.len(), 1);
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::from_toml("mission = \"circle\"\nseed = 9\nguidance.uav_bearing = 1.0").unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
