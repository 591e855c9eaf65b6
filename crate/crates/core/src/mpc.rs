//! Receding-horizon controller: sparse QP over the discretized coupled model
//! with linearized tether half-planes, solved in the vessel-parallel frame.

use std::sync::Arc;
use std::time::Instant;

use cotow_qp::{solve, QpSolution, SolveStatus, SolverSettings, SparseQP, INFTY};
use nalgebra::{Vector2, Vector3};

use crate::dynamics::layout::{self, NU, NX};
use crate::dynamics::{
    assemble_coupled_model, discretize, DiscreteModel, InputVector, ObjectParams, ObjectState,
    StateVector, TetherSpec, UavParams, UavState, UsvParams, UsvState,
};
use crate::frames::{from_vessel_parallel, to_vessel_parallel, wrap_angle, YawAngle};
use crate::strategy::TowStrategy;
use crate::CoreError;

#[derive(Debug, Clone, PartialEq)]
pub struct MpcConfig {
    pub n: usize,
    pub dt: f64,
    pub q: [f64; NX],
    pub r: [f64; NU],
    pub s: [f64; NX],
    pub x_min: [f64; NX],
    pub x_max: [f64; NX],
    pub u_min: [f64; NU],
    pub u_max: [f64; NU],
    pub tether: TetherSpec,
    pub solver: SolverSettings,
    /// Unpolished solutions are re-solved with tolerances cut tenfold down to this floor.
    pub eps_floor: f64,
}

impl MpcConfig {
    /// Default weights and bounds for the given actuator limits.
    pub fn with_limits(usv: &UsvParams, uav: &UavParams, tether: TetherSpec) -> Self {
        let mut q = [0.0; NX];
        q[layout::P_O].fill(50.0);
        q[layout::V_O].fill(1.0);
        q[layout::ETA_B.start + 2] = 20.0;
        q[layout::NU_B].fill(0.1);
        for i in layout::UAV_VEL {
            q[i] = 0.1;
        }
        q[layout::UAV_POS[0]] = 20.0;
        q[layout::UAV_POS[1]] = 20.0;
        q[layout::UAV_POS[2]] = 100.0;
        let s = q.map(|w| 10.0 * w);
        let mut x_min = [-INFTY; NX];
        let mut x_max = [INFTY; NX];
        for i in layout::UAV_VEL {
            x_min[i] = -uav.v_max;
            x_max[i] = uav.v_max;
        }
        Self {
            n: 30,
            dt: 0.1,
            q,
            r: [1e-3, 1e-3, 1.0, 1.0, 1.0],
            s,
            x_min,
            x_max,
            u_min: [
                -usv.tau_max,
                -usv.tau_max,
                -uav.u_max,
                -uav.u_max,
                -uav.u_max,
            ],
            u_max: [usv.tau_max, usv.tau_max, uav.u_max, uav.u_max, uav.u_max],
            tether,
            solver: SolverSettings {
                eps_abs: 1e-3,
                eps_rel: 1e-3,
                polish: true,
                ..SolverSettings::default()
            },
            eps_floor: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let weights_ok = self
            .q
            .iter()
            .chain(&self.r)
            .chain(&self.s)
            .all(|w| *w >= 0.0 && w.is_finite());
        let x_ok = self.x_min.iter().zip(&self.x_max).all(|(a, b)| a <= b);
        let u_ok = self.u_min.iter().zip(&self.u_max).all(|(a, b)| a <= b);
        if self.n < 2 || !(self.dt > 0.0) || !weights_ok || !x_ok || !u_ok {
            return Err(CoreError::InvalidParameter(format!(
                "MPC config: n = {}, dt = {}, weights non-negative: {weights_ok}, bounds ordered: {}",
                self.n,
                self.dt,
                x_ok && u_ok
            )));
        }
        self.solver.validate().map_err(CoreError::Qp)?;
        self.tether.validate()
    }
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self::with_limits(
            &UsvParams::default(),
            &UavParams::default(),
            TetherSpec::default(),
        )
    }
}

/// Full-state references for steps k = 1..n, sampled at t, t + dt, ….
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceWindow {
    pub x_r: Vec<StateVector>,
}

/// Linearized annulus: `b_min ≤ normalᵀ(p − center) ≤ b_max` for the UAV planar position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetherHalfPlanes {
    /// Unit radial direction from the object to the UAV.
    pub normal: Vector2<f64>,
    pub center: Vector2<f64>,
    pub b_min: f64,
    pub b_max: f64,
}

impl TetherHalfPlanes {
    /// Absolute bounds on `normalᵀp`.
    pub fn absolute_bounds(&self) -> (f64, f64) {
        let c = self.normal.dot(&self.center);
        (c + self.b_min, c + self.b_max)
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        let s = self.normal.dot(&(p - self.center));
        s >= self.b_min && s <= self.b_max
    }

    fn to_frame(self, frame: &VesselFrame) -> Self {
        Self {
            normal: frame.rotate_in(&self.normal),
            center: frame.point_in(&self.center),
            ..self
        }
    }
}

/// Planar radius `r = √(l² − Δz²)` and the half-planes `r ± ε` along the current radial ray.
pub fn linearize_tether(
    uav_pos: &Vector3<f64>,
    obj_pos: &Vector3<f64>,
    spec: &TetherSpec,
) -> Result<TetherHalfPlanes, CoreError> {
    let dz = uav_pos.z - obj_pos.z;
    let planar = Vector2::new(uav_pos.x - obj_pos.x, uav_pos.y - obj_pos.y);
    let sep = planar.norm();
    if spec.l_uav * spec.l_uav <= dz * dz || sep <= 1e-6 {
        return Err(CoreError::DegenerateGeometry { dz, planar: sep });
    }
    let r = (spec.l_uav * spec.l_uav - dz * dz).sqrt();
    Ok(TetherHalfPlanes {
        normal: planar / sep,
        center: obj_pos.xy(),
        b_min: r - spec.epsilon,
        b_max: r + spec.epsilon,
    })
}

/// Vessel-parallel frame: world axes rotated by the USV yaw, with the planar
/// origin moved to `origin` to keep QP data well scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselFrame {
    pub psi: f64,
    pub origin: Vector2<f64>,
}

impl VesselFrame {
    fn rot_in(&self, v: &Vector3<f64>) -> Vector3<f64> {
        to_vessel_parallel(v, YawAngle::new(self.psi))
    }

    fn rot_out(&self, v: &Vector3<f64>) -> Vector3<f64> {
        from_vessel_parallel(v, YawAngle::new(self.psi))
    }

    fn rotate_in(&self, v: &Vector2<f64>) -> Vector2<f64> {
        self.rot_in(&Vector3::new(v.x, v.y, 0.0)).xy()
    }

    fn point_in(&self, p: &Vector2<f64>) -> Vector2<f64> {
        self.rotate_in(&(p - self.origin))
    }

    fn pos_in(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rot_in(&Vector3::new(p.x - self.origin.x, p.y - self.origin.y, p.z))
    }

    fn pos_out(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let w = self.rot_out(p);
        Vector3::new(w.x + self.origin.x, w.y + self.origin.y, w.z)
    }

    /// World-frame stacked state to this frame. Body-frame USV velocities are unchanged.
    pub fn state_in(&self, x: &StateVector) -> StateVector {
        self.map_state(x, true)
    }

    pub fn state_out(&self, x: &StateVector) -> StateVector {
        self.map_state(x, false)
    }

    fn map_state(&self, x: &StateVector, inward: bool) -> StateVector {
        use layout::*;
        let pos = |p: Vector3<f64>| {
            if inward {
                self.pos_in(&p)
            } else {
                self.pos_out(&p)
            }
        };
        let vel = |v: Vector3<f64>| {
            if inward {
                self.rot_in(&v)
            } else {
                self.rot_out(&v)
            }
        };
        let mut y = *x;
        let p_o = pos(x.fixed_rows::<3>(P_O.start).into_owned());
        let v_o = vel(x.fixed_rows::<3>(V_O.start).into_owned());
        y.fixed_rows_mut::<3>(P_O.start).copy_from(&p_o);
        y.fixed_rows_mut::<3>(V_O.start).copy_from(&v_o);
        let b = pos(Vector3::new(x[ETA_B.start], x[ETA_B.start + 1], 0.0));
        y[ETA_B.start] = b.x;
        y[ETA_B.start + 1] = b.y;
        y[ETA_B.start + 2] = if inward {
            x[ETA_B.start + 2] - self.psi
        } else {
            x[ETA_B.start + 2] + self.psi
        };
        let p_u = pos(Vector3::new(x[UAV_POS[0]], x[UAV_POS[1]], x[UAV_POS[2]]));
        let v_u = vel(Vector3::new(x[UAV_VEL[0]], x[UAV_VEL[1]], x[UAV_VEL[2]]));
        for a in 0..3 {
            y[UAV_POS[a]] = p_u[a];
            y[UAV_VEL[a]] = v_u[a];
        }
        y
    }

    pub fn input_in(&self, u: &InputVector) -> InputVector {
        self.map_input(u, true)
    }

    pub fn input_out(&self, u: &InputVector) -> InputVector {
        self.map_input(u, false)
    }

    fn map_input(&self, u: &InputVector, inward: bool) -> InputVector {
        let a = Vector3::new(u[2], u[3], u[4]);
        let a = if inward {
            self.rot_in(&a)
        } else {
            self.rot_out(&a)
        };
        InputVector::new(u[0], u[1], a.x, a.y, a.z)
    }
}

/// Stacks the measured states into the world-frame model state.
pub fn stack_state(
    obj: &ObjectState,
    usv: &UsvState,
    uav: &UavState,
) -> Result<StateVector, CoreError> {
    use layout::*;
    let mut x = StateVector::zeros();
    x.fixed_rows_mut::<3>(P_O.start).copy_from(&obj.position());
    x.fixed_rows_mut::<3>(V_O.start)
        .copy_from(&obj.world_velocity()?);
    x.fixed_rows_mut::<3>(ETA_B.start).copy_from(&usv.eta);
    x.fixed_rows_mut::<3>(NU_B.start).copy_from(&usv.nu);
    x.fixed_rows_mut::<6>(ETA_U.start).copy_from(&uav.eta);
    Ok(x)
}

/// Index map of the stacked decision vector `(x_[1..n], u_[1..n−1])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QpLayout {
    pub n: usize,
}

impl QpLayout {
    pub fn num_vars(&self) -> usize {
        self.n * NX + (self.n - 1) * NU
    }

    /// Column of state entry `i` at step `k` (0-based, k = 0 is x_[1]).
    pub fn x(&self, k: usize, i: usize) -> usize {
        k * NX + i
    }

    /// Column of input entry `j` at step `k` (0-based, k = 0 is u_[1]).
    pub fn u(&self, k: usize, j: usize) -> usize {
        self.n * NX + k * NU + j
    }

    pub fn num_constraints(&self, tether_rows: bool) -> usize {
        2 * self.n * NX + (self.n - 1) * NU + if tether_rows { 2 * self.n } else { 0 }
    }

    fn dyn_row(&self, k: usize) -> usize {
        k * NX
    }

    fn state_box_row(&self, k: usize) -> usize {
        self.n * NX + k * NX
    }

    fn input_box_row(&self, k: usize) -> usize {
        2 * self.n * NX + k * NU
    }

    fn tether_row(&self, k: usize) -> usize {
        2 * self.n * NX + (self.n - 1) * NU + 2 * k
    }
}

/// Sparse receding-horizon QP. `x0` and `reference` are in the model frame;
/// `tether`, when present, holds one half-plane pair per step and adds two rows
/// per step on the UAV planar position.
/// Step-1 state bounds are widened to contain `x0` so the initial condition is never infeasible.
pub fn build_qp(
    model: &DiscreteModel,
    x0: &StateVector,
    reference: &ReferenceWindow,
    cfg: &MpcConfig,
    tether: Option<&[TetherHalfPlanes]>,
) -> Result<SparseQP, CoreError> {
    let n = cfg.n;
    if reference.x_r.len() != n {
        return Err(CoreError::DimensionMismatch(format!(
            "reference window has {} entries, horizon is {n}",
            reference.x_r.len()
        )));
    }
    if let Some(t) = tether {
        if t.len() != n {
            return Err(CoreError::DimensionMismatch(format!(
                "{} tether constraints for horizon {n}",
                t.len()
            )));
        }
    }
    let lay = QpLayout { n };
    let nv = lay.num_vars();
    let m = lay.num_constraints(tether.is_some());

    let mut p = Vec::with_capacity(nv);
    let mut q = vec![0.0; nv];
    for k in 0..n {
        let w = if k + 1 == n { &cfg.s } else { &cfg.q };
        for i in 0..NX {
            if w[i] != 0.0 {
                p.push((lay.x(k, i), lay.x(k, i), w[i]));
                q[lay.x(k, i)] = -w[i] * reference.x_r[k][i];
            }
        }
    }
    for k in 0..n - 1 {
        for j in 0..NU {
            if cfg.r[j] != 0.0 {
                p.push((lay.u(k, j), lay.u(k, j), cfg.r[j]));
            }
        }
    }

    let mut a = Vec::with_capacity(n * NX * (NX + NU + 2));
    let mut l = vec![0.0; m];
    let mut u = vec![0.0; m];
    for i in 0..NX {
        a.push((i, lay.x(0, i), 1.0));
        l[i] = x0[i];
        u[i] = x0[i];
    }
    for k in 0..n - 1 {
        let row0 = lay.dyn_row(k + 1);
        for i in 0..NX {
            let row = row0 + i;
            a.push((row, lay.x(k + 1, i), 1.0));
            for j in 0..NX {
                let v = model.a_d[(i, j)];
                if v != 0.0 {
                    a.push((row, lay.x(k, j), -v));
                }
            }
            for j in 0..NU {
                let v = model.b_d[(i, j)];
                if v != 0.0 {
                    a.push((row, lay.u(k, j), -v));
                }
            }
        }
    }
    for k in 0..n {
        let row0 = lay.state_box_row(k);
        for i in 0..NX {
            a.push((row0 + i, lay.x(k, i), 1.0));
            let (lo, hi) = (cfg.x_min[i], cfg.x_max[i]);
            if k == 0 {
                l[row0 + i] = lo.min(x0[i]);
                u[row0 + i] = hi.max(x0[i]);
            } else {
                l[row0 + i] = lo;
                u[row0 + i] = hi;
            }
        }
    }
    for k in 0..n - 1 {
        let row0 = lay.input_box_row(k);
        for j in 0..NU {
            a.push((row0 + j, lay.u(k, j), 1.0));
            l[row0 + j] = cfg.u_min[j];
            u[row0 + j] = cfg.u_max[j];
        }
    }
    if let Some(planes) = tether {
        let [ix, iy, _] = layout::UAV_POS;
        for (k, t) in planes.iter().enumerate() {
            let (lo, hi) = t.absolute_bounds();
            let s0 = t.normal.x * x0[ix] + t.normal.y * x0[iy];
            let row = lay.tether_row(k);
            for r in [row, row + 1] {
                a.push((r, lay.x(k, ix), t.normal.x));
                a.push((r, lay.x(k, iy), t.normal.y));
            }
            let (lo_k, hi_k) = if k == 0 {
                (lo.min(s0), hi.max(s0))
            } else {
                (lo, hi)
            };
            l[row] = lo_k;
            u[row] = INFTY;
            l[row + 1] = -INFTY;
            u[row + 1] = hi_k;
        }
    }
    SparseQP::from_triplets(nv, &p, q, m, &a, l, u).map_err(CoreError::Qp)
}

/// Per-step robot trajectories in the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MpcOutput {
    /// (η_b, ν_b) for k = 1..n; η_b in the world frame, ν_b in the body frame.
    pub usv_traj: Vec<(Vector3<f64>, Vector3<f64>)>,
    /// (p_u, v_u) for k = 1..n in the world frame.
    pub uav_traj: Vec<(Vector3<f64>, Vector3<f64>)>,
    /// Predicted object (p_o, v_o) for k = 1..n in the world frame.
    pub object_traj: Vec<(Vector3<f64>, Vector3<f64>)>,
    /// Planned inputs u_[1..n−1]; UAV accelerations in the world frame.
    pub inputs: Vec<InputVector>,
    pub first_inputs: InputVector,
    pub qp_status: SolveStatus,
    pub iterations: usize,
    pub polished: bool,
    /// Wall-clock solve time, s.
    pub solve_time: f64,
    /// Constraints were relaxed after an infeasible first attempt.
    pub relaxed: bool,
    /// Worst primal constraint violation of the returned solution.
    pub constraint_violation: f64,
    pub tether: Option<TetherHalfPlanes>,
}

/// De-interleaves the decision vector into world-frame trajectories.
pub fn extract_trajectories(sol: &QpSolution, lay: QpLayout, frame: &VesselFrame) -> MpcOutput {
    use layout::*;
    let mut usv_traj = Vec::with_capacity(lay.n);
    let mut uav_traj = Vec::with_capacity(lay.n);
    let mut object_traj = Vec::with_capacity(lay.n);
    for k in 0..lay.n {
        let xk = StateVector::from_iterator((0..NX).map(|i| sol.x[lay.x(k, i)]));
        let w = frame.state_out(&xk);
        object_traj.push((
            w.fixed_rows::<3>(P_O.start).into_owned(),
            w.fixed_rows::<3>(V_O.start).into_owned(),
        ));
        usv_traj.push((
            w.fixed_rows::<3>(ETA_B.start).into_owned(),
            w.fixed_rows::<3>(NU_B.start).into_owned(),
        ));
        uav_traj.push((
            Vector3::new(w[UAV_POS[0]], w[UAV_POS[1]], w[UAV_POS[2]]),
            Vector3::new(w[UAV_VEL[0]], w[UAV_VEL[1]], w[UAV_VEL[2]]),
        ));
    }
    let inputs: Vec<InputVector> = (0..lay.n - 1)
        .map(|k| {
            frame.input_out(&InputVector::from_iterator(
                (0..NU).map(|j| sol.x[lay.u(k, j)]),
            ))
        })
        .collect();
    MpcOutput {
        usv_traj,
        uav_traj,
        object_traj,
        first_inputs: inputs[0],
        inputs,
        qp_status: sol.status,
        iterations: sol.iterations,
        polished: sol.polished,
        solve_time: 0.0,
        relaxed: false,
        constraint_violation: sol.primal_res,
        tether: None,
    }
}

#[derive(Debug, Clone)]
struct WarmStart {
    frame: VesselFrame,
    x: Vec<f64>,
    y: Vec<f64>,
}

/// Stateful controller: model, configuration, strategy and warm-start memory.
#[derive(Debug, Clone)]
pub struct MpcController {
    cfg: MpcConfig,
    model: DiscreteModel,
    strategy: Arc<dyn TowStrategy>,
    warm: Option<WarmStart>,
    last_tether: Option<TetherHalfPlanes>,
    pub warm_start: bool,
}

impl MpcController {
    pub fn new(
        cfg: MpcConfig,
        obj: &ObjectParams,
        usv: &UsvParams,
        uav: &UavParams,
        strategy: Arc<dyn TowStrategy>,
    ) -> Result<Self, CoreError> {
        let mut cfg = cfg;
        strategy.adapt_config(&mut cfg);
        cfg.validate()?;
        let mut model = assemble_coupled_model(obj, usv, uav)?;
        strategy.adapt_model(&mut model);
        let model = discretize(&model, cfg.dt)?;
        Ok(Self {
            cfg,
            model,
            strategy,
            warm: None,
            last_tether: None,
            warm_start: true,
        })
    }

    pub fn config(&self) -> &MpcConfig {
        &self.cfg
    }

    pub fn model(&self) -> &DiscreteModel {
        &self.model
    }

    pub fn strategy(&self) -> &dyn TowStrategy {
        self.strategy.as_ref()
    }

    pub fn reset(&mut self) {
        self.warm = None;
        self.last_tether = None;
    }

    /// One controller update from measured states and a world-frame reference window.
    pub fn control_step(
        &mut self,
        obj: &ObjectState,
        usv: &UsvState,
        uav: &UavState,
        reference: &ReferenceWindow,
    ) -> Result<MpcOutput, CoreError> {
        let start = Instant::now();
        let x_world = stack_state(obj, usv, uav)?;
        if x_world.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteState);
        }
        let frame = VesselFrame {
            psi: usv.eta.z,
            origin: obj.position().xy(),
        };
        let x0 = frame.state_in(&x_world);
        let ref_p = ReferenceWindow {
            x_r: reference.x_r.iter().map(|x| frame.state_in(x)).collect(),
        };

        let tether_world = if self.strategy.uses_uav() {
            match linearize_tether(&uav.position(), &obj.position(), &self.cfg.tether) {
                Ok(t) => Some(t),
                Err(e) => Some(self.last_tether.ok_or(e)?),
            }
        } else {
            None
        };
        // The annulus travels with the reference so the UAV can keep pace with the object.
        let tether_p: Option<Vec<TetherHalfPlanes>> = tether_world.map(|t| {
            let p0 = reference.x_r[0]
                .fixed_rows::<2>(layout::P_O.start)
                .into_owned();
            reference
                .x_r
                .iter()
                .map(|xr| {
                    let shift = xr.fixed_rows::<2>(layout::P_O.start) - p0;
                    TetherHalfPlanes {
                        center: t.center + shift,
                        ..t
                    }
                    .to_frame(&frame)
                })
                .collect()
        });

        let qp = build_qp(&self.model, &x0, &ref_p, &self.cfg, tether_p.as_deref())?;
        let lay = QpLayout { n: self.cfg.n };
        let warm = if self.warm_start {
            self.shifted_warm_start(&frame, &x0, qp.m())
        } else {
            None
        };
        let warm_ref = warm.as_ref().map(|(x, y)| (x.as_slice(), y.as_slice()));
        let mut sol = solve_tightening(&qp, &self.cfg, warm_ref)?;
        let mut relaxed = false;
        if sol.status == SolveStatus::PrimalInfeasible {
            let mut loose = qp.clone();
            relax_state_rows(&mut loose, lay);
            sol = solve_tightening(&loose, &self.cfg, None)?;
            relaxed = true;
        }
        if !matches!(sol.status, SolveStatus::Solved | SolveStatus::MaxIter) {
            self.warm = None;
            return Err(CoreError::SolverFailed(sol.status));
        }

        let mut out = extract_trajectories(&sol, lay, &frame);
        out.relaxed = relaxed;
        out.tether = tether_world;
        out.solve_time = start.elapsed().as_secs_f64();
        self.last_tether = tether_world;
        self.warm = Some(WarmStart {
            frame,
            x: sol.x,
            y: sol.y,
        });
        Ok(out)
    }

    /// Previous solution advanced one step and re-expressed in the new frame.
    fn shifted_warm_start(
        &self,
        frame: &VesselFrame,
        x0: &StateVector,
        m: usize,
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let w = self.warm.as_ref()?;
        if w.y.len() != m {
            return None;
        }
        let n = self.cfg.n;
        let lay = QpLayout { n };
        let mut x = vec![0.0; lay.num_vars()];
        for k in 0..n {
            let src = (k + 1).min(n - 1);
            let old = StateVector::from_iterator((0..NX).map(|i| w.x[lay.x(src, i)]));
            let mut new = frame.state_in(&w.frame.state_out(&old));
            if k == 0 {
                new = *x0;
            }
            // keep the relative yaw continuous with the new frame
            let iy = layout::ETA_B.start + 2;
            new[iy] = wrap_angle(new[iy]);
            for i in 0..NX {
                x[lay.x(k, i)] = new[i];
            }
        }
        for k in 0..n - 1 {
            let src = (k + 1).min(n - 2);
            let old = InputVector::from_iterator((0..NU).map(|j| w.x[lay.u(src, j)]));
            let new = frame.input_in(&w.frame.input_out(&old));
            for j in 0..NU {
                x[lay.u(k, j)] = new[j];
            }
        }
        let mut y = w.y.clone();
        shift_blocks(&mut y[lay.dyn_row(1)..lay.dyn_row(n)], NX);
        shift_blocks(&mut y[lay.state_box_row(0)..lay.state_box_row(n)], NX);
        shift_blocks(&mut y[lay.input_box_row(0)..lay.input_box_row(n - 1)], NU);
        if m > lay.num_constraints(false) {
            shift_blocks(&mut y[lay.tether_row(0)..lay.tether_row(n)], 2);
        }
        Some((x, y))
    }
}

/// Loose solve plus polish; if polishing fails the iterate is refined at tighter
/// tolerances, warm-started from the previous attempt.
fn solve_tightening(
    qp: &SparseQP,
    cfg: &MpcConfig,
    warm: Option<(&[f64], &[f64])>,
) -> Result<QpSolution, CoreError> {
    let mut st = cfg.solver;
    let mut sol = solve(qp, &st, warm)?;
    let mut iterations = sol.iterations;
    while sol.status == SolveStatus::Solved && st.polish && !sol.polished && st.eps_abs > cfg.eps_floor {
        st.eps_abs = (st.eps_abs / 10.0).max(cfg.eps_floor);
        st.eps_rel = (st.eps_rel / 10.0).max(cfg.eps_floor);
        sol = solve(qp, &st, Some((&sol.x, &sol.y)))?;
        iterations += sol.iterations;
    }
    sol.iterations = iterations;
    Ok(sol)
}

fn shift_blocks(v: &mut [f64], width: usize) {
    if v.len() > width {
        v.copy_within(width.., 0);
    }
}

/// Drops state boxes and tether rows, keeping dynamics and input bounds.
fn relax_state_rows(qp: &mut SparseQP, lay: QpLayout) {
    for row in lay.state_box_row(0)..lay.state_box_row(lay.n) {
        qp.l[row] = -INFTY;
        qp.u[row] = INFTY;
    }
    for row in lay.tether_row(0)..qp.m() {
        qp.l[row] = -INFTY;
        qp.u[row] = INFTY;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn three_four_five_radius() {
        let spec = TetherSpec {
            l_usv: 4.0,
            l_uav: 5.0,
            epsilon: 0.3,
        };
        let t = linearize_tether(&Vector3::new(4.0, 0.0, 3.0), &Vector3::zeros(), &spec).unwrap();
        assert_relative_eq!(t.b_min, 3.7, epsilon = 1e-12);
        assert_relative_eq!(t.b_max, 4.3, epsilon = 1e-12);
        assert!(t.contains(&Vector2::new(4.0, 0.0)));
    }

    #[test]
    fn degenerate_geometry_is_reported() {
        let spec = TetherSpec::default();
        let above = linearize_tether(&Vector3::new(0.0, 0.0, 3.0), &Vector3::zeros(), &spec);
        assert!(matches!(above, Err(CoreError::DegenerateGeometry { .. })));
        let high = linearize_tether(&Vector3::new(1.0, 0.0, 6.0), &Vector3::zeros(), &spec);
        assert!(matches!(high, Err(CoreError::DegenerateGeometry { .. })));
    }

    #[test]
    fn frame_round_trip() {
        let f = VesselFrame {
            psi: 0.7,
            origin: Vector2::new(3.0, -2.0),
        };
        let x = StateVector::from_fn(|i, _| (i as f64 * 0.37).sin() * 5.0);
        assert_relative_eq!(f.state_out(&f.state_in(&x)), x, epsilon = 1e-12);
        let u = InputVector::new(1.0, 2.0, 3.0, 4.0, 5.0);
        assert_relative_eq!(f.input_out(&f.input_in(&u)), u, epsilon = 1e-12);
    }
}
