//! ADMM operator-splitting iteration for [`SparseQP`].
//!
//! The reduced system `(P + σI + Aᵀ diag(ρ) A) x̃ = rhs` is factored once per
//! ρ value and reused across iterations. Data is Ruiz-equilibrated before the
//! iteration; residuals and termination are always measured on the original data.

use crate::csc::CscMatrix;
use crate::ldl::EnvelopeLdl;
use crate::problem::{SparseQP, INFTY};
use crate::QpError;

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_EQ_FACTOR: f64 = 1e3;
const RHO_ADAPT_TRIGGER: f64 = 5.0;
const SCALING_MIN: f64 = 1e-4;
const SCALING_MAX: f64 = 1e4;
const POLISH_DELTA: f64 = 1e-6;
const POLISH_REFINE_ITERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// ADMM penalty for inequality rows; equality rows use `1e3 * rho`.
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation in (0, 2).
    pub alpha: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_prim_inf: f64,
    pub eps_dual_inf: f64,
    pub max_iter: usize,
    /// Residual-balancing ρ update period in iterations; 0 disables it.
    pub adaptive_rho_interval: usize,
    /// Ruiz equilibration passes; 0 disables scaling.
    pub scaling_iters: usize,
    /// Refine the ADMM result by solving the KKT system on the guessed active set.
    pub polish: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            eps_abs: 1e-5,
            eps_rel: 1e-5,
            eps_prim_inf: 1e-5,
            eps_dual_inf: 1e-5,
            max_iter: 4000,
            adaptive_rho_interval: 25,
            scaling_iters: 10,
            polish: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), QpError> {
        let ok = self.rho > 0.0
            && self.sigma > 0.0
            && self.alpha > 0.0
            && self.alpha < 2.0
            && self.eps_abs >= 0.0
            && self.eps_rel >= 0.0
            && self.eps_abs + self.eps_rel > 0.0
            && self.eps_prim_inf > 0.0
            && self.eps_dual_inf > 0.0
            && self.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(QpError::InvalidSettings(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Solved,
    MaxIter,
    PrimalInfeasible,
    DualInfeasible,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Solved => "solved",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::DualInfeasible => "dual_infeasible",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = QpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solved" => Ok(SolveStatus::Solved),
            "max_iter" => Ok(SolveStatus::MaxIter),
            "primal_infeasible" => Ok(SolveStatus::PrimalInfeasible),
            "dual_infeasible" => Ok(SolveStatus::DualInfeasible),
            other => Err(QpError::Parse(format!("unknown status `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub primal_res: f64,
    pub dual_res: f64,
    pub polished: bool,
}

/// Solves `qp` from scratch, optionally warm-started from a primal/dual pair.
pub fn solve(
    qp: &SparseQP,
    settings: &SolverSettings,
    warm: Option<(&[f64], &[f64])>,
) -> Result<QpSolution, QpError> {
    let mut solver = AdmmSolver::new(qp, *settings)?;
    Ok(solver.solve(warm))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Free,
    Inequality,
    Equality,
}

/// Ruiz-scaled copy of the problem: `P̄ = c D P D`, `Ā = E A D`, `q̄ = c D q`.
#[derive(Debug, Clone)]
struct Scaled {
    p: CscMatrix,
    a: CscMatrix,
    /// Rows of `Ā`, stored as the columns of `Āᵀ`.
    a_rows: CscMatrix,
    q: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
}

fn limit_scaling(v: f64) -> f64 {
    if v < SCALING_MIN {
        1.0
    } else {
        v.min(SCALING_MAX)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn scaled_inf_norm(v: &[f64], s: &[f64]) -> f64 {
    v.iter().zip(s).fold(0.0, |m, (x, k)| m.max((x * k).abs()))
}

impl Scaled {
    fn new(qp: &SparseQP, iters: usize) -> Self {
        let (n, m) = (qp.n(), qp.m());
        let mut p = qp.p.clone();
        let mut a = qp.a.clone();
        let mut q = qp.q.clone();
        let mut d = vec![1.0; n];
        let mut e = vec![1.0; m];
        let mut c = 1.0;

        for _ in 0..iters {
            let p_cols = p.sym_upper_col_inf_norms();
            let a_cols = a.col_inf_norms();
            let delta: Vec<f64> = p_cols
                .iter()
                .zip(&a_cols)
                .map(|(x, y)| 1.0 / limit_scaling(x.max(*y)).sqrt())
                .collect();
            let eps: Vec<f64> = a
                .row_inf_norms()
                .iter()
                .map(|v| 1.0 / limit_scaling(*v).sqrt())
                .collect();
            p.scale(&delta, &delta);
            a.scale(&eps, &delta);
            q.iter_mut().zip(&delta).for_each(|(v, s)| *v *= s);
            d.iter_mut().zip(&delta).for_each(|(v, s)| *v *= s);
            e.iter_mut().zip(&eps).for_each(|(v, s)| *v *= s);

            let p_cols = p.sym_upper_col_inf_norms();
            let mean_p = if n > 0 { p_cols.iter().sum::<f64>() / n as f64 } else { 0.0 };
            let gamma = 1.0 / limit_scaling(mean_p.max(inf_norm(&q)));
            p.values.iter_mut().for_each(|v| *v *= gamma);
            q.iter_mut().for_each(|v| *v *= gamma);
            c *= gamma;
        }

        let scale_bound = |b: f64, s: f64| if b.abs() >= INFTY { b } else { b * s };
        let l = qp.l.iter().zip(&e).map(|(&b, &s)| scale_bound(b, s)).collect();
        let u = qp.u.iter().zip(&e).map(|(&b, &s)| scale_bound(b, s)).collect();
        let a_rows = a.transpose();
        Self { p, a, a_rows, q, l, u, d, e, c }
    }
}

/// Single-caller solver instance holding the scaled problem and its factorization.
#[derive(Debug, Clone)]
pub struct AdmmSolver<'a> {
    qp: &'a SparseQP,
    settings: SolverSettings,
    s: Scaled,
    kinds: Vec<RowKind>,
    rho: f64,
    rho_vec: Vec<f64>,
    kkt: EnvelopeLdl,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(qp: &'a SparseQP, settings: SolverSettings) -> Result<Self, QpError> {
        settings.validate()?;
        qp.validate()?;
        check_convex(qp, settings.sigma)?;

        let s = Scaled::new(qp, settings.scaling_iters);
        let kinds: Vec<RowKind> = s
            .l
            .iter()
            .zip(&s.u)
            .map(|(&lo, &hi)| {
                if lo <= -INFTY && hi >= INFTY {
                    RowKind::Free
                } else if (hi - lo).abs() < 1e-12 * (1.0 + lo.abs()) {
                    RowKind::Equality
                } else {
                    RowKind::Inequality
                }
            })
            .collect();

        let n = qp.n();
        let mut pattern: Vec<(usize, usize)> = s.p.triplets().map(|(i, j, _)| (i, j)).collect();
        pattern.extend((0..n).map(|i| (i, i)));
        let rows = &s.a_rows;
        for r in 0..rows.ncols {
            let cols = &rows.rowind[rows.colptr[r]..rows.colptr[r + 1]];
            for (k, &ci) in cols.iter().enumerate() {
                for &cj in &cols[k + 1..] {
                    pattern.push((ci, cj));
                }
            }
        }
        let kkt = EnvelopeLdl::analyze(n, pattern);

        let mut solver = Self {
            qp,
            settings,
            s,
            kinds,
            rho: settings.rho.clamp(RHO_MIN, RHO_MAX),
            rho_vec: Vec::new(),
            kkt,
        };
        solver.set_rho(solver.rho)?;
        Ok(solver)
    }

    fn set_rho(&mut self, rho: f64) -> Result<(), QpError> {
        self.rho = rho;
        self.rho_vec = self
            .kinds
            .iter()
            .map(|k| match k {
                RowKind::Free => RHO_MIN,
                RowKind::Inequality => rho,
                RowKind::Equality => (RHO_EQ_FACTOR * rho).min(RHO_MAX),
            })
            .collect();

        let kkt = &mut self.kkt;
        kkt.clear();
        for (i, j, v) in self.s.p.triplets() {
            kkt.add(i, j, v);
        }
        for i in 0..kkt.dim() {
            kkt.add(i, i, self.settings.sigma);
        }
        let rows = &self.s.a_rows;
        for r in 0..rows.ncols {
            let range = rows.colptr[r]..rows.colptr[r + 1];
            let cols = &rows.rowind[range.clone()];
            let vals = &rows.values[range];
            let rr = self.rho_vec[r];
            for k in 0..cols.len() {
                kkt.add(cols[k], cols[k], rr * vals[k] * vals[k]);
                for l in k + 1..cols.len() {
                    kkt.add(cols[k], cols[l], rr * vals[k] * vals[l]);
                }
            }
        }
        kkt.factor().map_err(|_| QpError::NotConvex)
    }

    fn project(&self, v: &mut [f64]) {
        for ((x, lo), hi) in v.iter_mut().zip(&self.s.l).zip(&self.s.u) {
            *x = x.clamp(*lo, *hi);
        }
    }

    /// Runs ADMM. `warm` is an unscaled `(x, y)` pair.
    pub fn solve(&mut self, warm: Option<(&[f64], &[f64])>) -> QpSolution {
        let (n, m) = (self.qp.n(), self.qp.m());
        let st = self.settings;
        let s = &self.s;

        let mut x = vec![0.0; n];
        let mut y = vec![0.0; m];
        let mut z = vec![0.0; m];
        if let Some((wx, wy)) = warm {
            if wx.len() == n && wy.len() == m {
                for j in 0..n {
                    x[j] = wx[j] / s.d[j];
                }
                for i in 0..m {
                    y[i] = s.c * wy[i] / s.e[i];
                }
                s.a.mul_vec(&x, &mut z);
                self.project(&mut z);
            }
        }
        let s = &self.s;

        let mut ax = vec![0.0; m];
        s.a.mul_vec(&x, &mut ax);
        let mut rhs = vec![0.0; n];
        let mut tmp_m = vec![0.0; m];
        let mut zt = vec![0.0; m];
        let mut px = vec![0.0; n];
        let mut aty = vec![0.0; n];
        let mut x_prev = vec![0.0; n];
        let mut y_prev = vec![0.0; m];

        let mut status = SolveStatus::MaxIter;
        let mut iterations = st.max_iter;
        let mut res = (f64::INFINITY, f64::INFINITY);

        for iter in 1..=st.max_iter {
            x_prev.copy_from_slice(&x);
            y_prev.copy_from_slice(&y);

            let s = &self.s;
            for i in 0..m {
                tmp_m[i] = self.rho_vec[i] * z[i] - y[i];
            }
            s.a.tr_mul_vec(&tmp_m, &mut rhs);
            for j in 0..n {
                rhs[j] += st.sigma * x[j] - s.q[j];
            }
            self.kkt.solve(&mut rhs);
            let s = &self.s;
            s.a.mul_vec(&rhs, &mut zt);

            let alpha = st.alpha;
            for j in 0..n {
                x[j] = alpha * rhs[j] + (1.0 - alpha) * x[j];
            }
            for i in 0..m {
                let z_relaxed = alpha * zt[i] + (1.0 - alpha) * z[i];
                ax[i] = alpha * zt[i] + (1.0 - alpha) * ax[i];
                let z_new = (z_relaxed + y[i] / self.rho_vec[i]).clamp(s.l[i], s.u[i]);
                y[i] += self.rho_vec[i] * (z_relaxed - z_new);
                z[i] = z_new;
            }

            s.p.sym_upper_mul_vec(&x, &mut px);
            s.a.tr_mul_vec(&y, &mut aty);
            let (prim, dual, eps_prim, eps_dual) = self.residuals(&x, &z, &ax, &px, &aty);
            res = (prim, dual);
            if prim <= eps_prim && dual <= eps_dual {
                status = SolveStatus::Solved;
                iterations = iter;
                break;
            }
            if self.primal_infeasible(&y, &y_prev) {
                status = SolveStatus::PrimalInfeasible;
                iterations = iter;
                break;
            }
            if self.dual_infeasible(&x, &x_prev) {
                status = SolveStatus::DualInfeasible;
                iterations = iter;
                break;
            }

            if st.adaptive_rho_interval > 0 && iter % st.adaptive_rho_interval == 0 {
                let s = &self.s;
                let prim_s = ax.iter().zip(&z).fold(0.0f64, |mx, (a, b)| mx.max((a - b).abs()));
                let dual_s = (0..n).fold(0.0f64, |mx, j| mx.max((px[j] + s.q[j] + aty[j]).abs()));
                let prim_n = inf_norm(&ax).max(inf_norm(&z));
                let dual_n = inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&s.q));
                let ratio = (prim_s / (prim_n + 1e-10)) / (dual_s / (dual_n + 1e-10) + 1e-30);
                let rho_new = (self.rho * ratio.sqrt()).clamp(RHO_MIN, RHO_MAX);
                if rho_new > RHO_ADAPT_TRIGGER * self.rho || rho_new < self.rho / RHO_ADAPT_TRIGGER {
                    // K stays SPD for any ρ > 0; a failure here means numerical breakdown,
                    // in which case the previous factor is kept.
                    let old = self.rho;
                    if self.set_rho(rho_new).is_err() {
                        let _ = self.set_rho(old);
                    }
                }
            }
        }

        let s = &self.s;
        let x_out: Vec<f64> = x.iter().zip(&s.d).map(|(v, d)| v * d).collect();
        let y_out: Vec<f64> = y.iter().zip(&s.e).map(|(v, e)| v * e / s.c).collect();
        // Distance of Ax to the box never exceeds its distance to the iterate z,
        // so these are no larger than the residuals used for termination.
        let (primal_res, dual_res) = if res.0.is_finite() {
            crate::kkt_residuals(self.qp, &x_out, &y_out)
        } else {
            res
        };
        let mut sol = QpSolution {
            x: x_out,
            y: y_out,
            status,
            iterations,
            primal_res,
            dual_res,
            polished: false,
        };
        if status == SolveStatus::Solved && st.polish {
            if let Some(p) = self.polish(&x, &z, &y) {
                if p.primal_res <= sol.primal_res.max(1e-12) && p.dual_res <= sol.dual_res.max(1e-12) {
                    sol = QpSolution { iterations, ..p };
                }
            }
        }
        sol
    }

    /// Unscaled residuals and their tolerances.
    fn residuals(&self, x: &[f64], z: &[f64], ax: &[f64], px: &[f64], aty: &[f64]) -> (f64, f64, f64, f64) {
        let s = &self.s;
        let st = &self.settings;
        let mut prim = 0.0f64;
        let mut ax_n = 0.0f64;
        let mut z_n = 0.0f64;
        for i in 0..z.len() {
            let inv = 1.0 / s.e[i];
            prim = prim.max(((ax[i] - z[i]) * inv).abs());
            ax_n = ax_n.max((ax[i] * inv).abs());
            z_n = z_n.max((z[i] * inv).abs());
        }
        let mut dual = 0.0f64;
        let mut px_n = 0.0f64;
        let mut aty_n = 0.0f64;
        let mut q_n = 0.0f64;
        for j in 0..x.len() {
            let inv = 1.0 / (s.d[j] * s.c);
            dual = dual.max(((px[j] + s.q[j] + aty[j]) * inv).abs());
            px_n = px_n.max((px[j] * inv).abs());
            aty_n = aty_n.max((aty[j] * inv).abs());
            q_n = q_n.max((s.q[j] * inv).abs());
        }
        let eps_prim = st.eps_abs + st.eps_rel * ax_n.max(z_n);
        let eps_dual = st.eps_abs + st.eps_rel * px_n.max(aty_n).max(q_n);
        (prim, dual, eps_prim, eps_dual)
    }

    fn primal_infeasible(&self, y: &[f64], y_prev: &[f64]) -> bool {
        let s = &self.s;
        let m = y.len();
        if m == 0 {
            return false;
        }
        let dy_bar: Vec<f64> = y.iter().zip(y_prev).map(|(a, b)| a - b).collect();
        let dy: Vec<f64> = dy_bar.iter().zip(&s.e).map(|(v, e)| v * e).collect();
        let norm = inf_norm(&dy);
        if norm < 1e-10 {
            return false;
        }
        let eps = self.settings.eps_prim_inf * norm;
        let mut support = 0.0;
        for i in 0..m {
            let (lo, hi) = (self.qp.l[i], self.qp.u[i]);
            if dy[i] > 0.0 {
                if hi >= INFTY {
                    if dy[i] > eps {
                        return false;
                    }
                } else {
                    support += hi * dy[i];
                }
            } else if dy[i] < 0.0 {
                if lo <= -INFTY {
                    if -dy[i] > eps {
                        return false;
                    }
                } else {
                    support += lo * dy[i];
                }
            }
        }
        if support >= -eps {
            return false;
        }
        let mut at = vec![0.0; s.d.len()];
        s.a.tr_mul_vec(&dy_bar, &mut at);
        scaled_inf_norm(&at, &s.d.iter().map(|d| 1.0 / d).collect::<Vec<_>>()) <= eps
    }

    fn dual_infeasible(&self, x: &[f64], x_prev: &[f64]) -> bool {
        let s = &self.s;
        let dx_bar: Vec<f64> = x.iter().zip(x_prev).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = dx_bar.iter().zip(&s.d).map(|(v, d)| v * d).collect();
        let norm = inf_norm(&dx);
        if norm < 1e-10 {
            return false;
        }
        let eps = self.settings.eps_dual_inf * norm;
        let qdx: f64 = s.q.iter().zip(&dx_bar).map(|(a, b)| a * b).sum::<f64>() / s.c;
        if qdx > -eps {
            return false;
        }
        let mut pdx = vec![0.0; dx.len()];
        s.p.sym_upper_mul_vec(&dx_bar, &mut pdx);
        let inv_dc: Vec<f64> = s.d.iter().map(|d| 1.0 / (d * s.c)).collect();
        if scaled_inf_norm(&pdx, &inv_dc) > eps {
            return false;
        }
        let mut adx = vec![0.0; s.e.len()];
        s.a.mul_vec(&dx_bar, &mut adx);
        for i in 0..adx.len() {
            let v = adx[i] / s.e[i];
            let (lo, hi) = (self.qp.l[i], self.qp.u[i]);
            let ok = match (lo <= -INFTY, hi >= INFTY) {
                (true, true) => true,
                (false, true) => v >= -eps,
                (true, false) => v <= eps,
                (false, false) => v.abs() <= eps,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Solves the equality-constrained KKT system on the active set guessed from
    /// the ADMM iterate and returns the unscaled result if it factors.
    fn polish(&self, x: &[f64], z: &[f64], y: &[f64]) -> Option<QpSolution> {
        let s = &self.s;
        let (n, m) = (x.len(), z.len());
        let mut active: Vec<(usize, f64)> = Vec::new();
        for i in 0..m {
            if self.kinds[i] == RowKind::Equality || z[i] - s.l[i] < -y[i] {
                active.push((i, s.l[i]));
            } else if s.u[i] - z[i] < y[i] {
                active.push((i, s.u[i]));
            }
        }
        let na = active.len();
        let dim = n + na;

        let mut entries: Vec<(usize, usize, f64)> = s.p.triplets().collect();
        let mut a_entries: Vec<(usize, usize, f64)> = Vec::new();
        for (k, &(row, _)) in active.iter().enumerate() {
            let r = &s.a_rows;
            for idx in r.colptr[row]..r.colptr[row + 1] {
                a_entries.push((n + k, r.rowind[idx], r.values[idx]));
            }
        }
        entries.extend(a_entries.iter().copied());
        let mut pattern: Vec<(usize, usize)> = entries.iter().map(|&(i, j, _)| (i, j)).collect();
        pattern.extend((0..dim).map(|i| (i, i)));
        let mut kkt = EnvelopeLdl::analyze(dim, pattern);
        for &(i, j, v) in &entries {
            kkt.add(i, j, v);
        }
        for i in 0..n {
            kkt.add(i, i, POLISH_DELTA);
        }
        for k in 0..na {
            kkt.add(n + k, n + k, -POLISH_DELTA);
        }
        kkt.factor().ok()?;

        let mut rhs = vec![0.0; dim];
        for j in 0..n {
            rhs[j] = -s.q[j];
        }
        for (k, &(_, b)) in active.iter().enumerate() {
            rhs[n + k] = b;
        }
        let mut sol = rhs.clone();
        kkt.solve(&mut sol);

        // iterative refinement against the unregularized KKT matrix
        let kkt_mul = |v: &[f64], out: &mut [f64]| {
            out.iter_mut().for_each(|o| *o = 0.0);
            let mut pv = vec![0.0; n];
            s.p.sym_upper_mul_vec(&v[..n], &mut pv);
            out[..n].copy_from_slice(&pv);
            for &(r, c, val) in &a_entries {
                out[r] += val * v[c];
                out[c] += val * v[r];
            }
        };
        let mut kv = vec![0.0; dim];
        for _ in 0..POLISH_REFINE_ITERS {
            kkt_mul(&sol, &mut kv);
            let mut corr: Vec<f64> = rhs.iter().zip(&kv).map(|(a, b)| a - b).collect();
            kkt.solve(&mut corr);
            sol.iter_mut().zip(&corr).for_each(|(v, c)| *v += c);
        }

        let xs = &sol[..n];
        let mut ys = vec![0.0; m];
        for (k, &(row, _)) in active.iter().enumerate() {
            ys[row] = sol[n + k];
        }
        let x_out: Vec<f64> = xs.iter().zip(&s.d).map(|(v, d)| v * d).collect();
        let y_out: Vec<f64> = ys.iter().zip(&s.e).map(|(v, e)| v * e / s.c).collect();
        if x_out.iter().chain(&y_out).any(|v| !v.is_finite()) {
            return None;
        }
        let (primal_res, dual_res) = crate::kkt_residuals(self.qp, &x_out, &y_out);
        Some(QpSolution {
            x: x_out,
            y: y_out,
            status: SolveStatus::Solved,
            iterations: 0,
            primal_res,
            dual_res,
            polished: true,
        })
    }
}

/// `P` is accepted when `P + σI` admits an LDLᵀ factorization with positive pivots.
fn check_convex(qp: &SparseQP, sigma: f64) -> Result<(), QpError> {
    let n = qp.n();
    if n == 0 {
        return Ok(());
    }
    let mut pattern: Vec<(usize, usize)> = qp.p.triplets().map(|(i, j, _)| (i, j)).collect();
    pattern.extend((0..n).map(|i| (i, i)));
    let mut ldl = EnvelopeLdl::analyze(n, pattern);
    for (i, j, v) in qp.p.triplets() {
        ldl.add(i, j, v);
    }
    for i in 0..n {
        ldl.add(i, i, sigma);
    }
    ldl.factor().map_err(|_| QpError::NotConvex)?;
    if ldl.pivots().all(|d| d > 0.0) {
        Ok(())
    } else {
        Err(QpError::NotConvex)
    }
}
