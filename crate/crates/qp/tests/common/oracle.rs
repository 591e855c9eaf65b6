//! Dense reference solvers used to check the ADMM results.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Dense strictly convex QP `min ½xᵀPx + qᵀx  s.t.  l ≤ Ax ≤ u` with a known feasible point.
#[derive(Debug, Clone)]
pub struct DenseQp {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub feasible: DVector<f64>,
}

impl DenseQp {
    pub fn random<R: Rng>(rng: &mut R, n: usize, m: usize) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = g.transpose() * &g + DMatrix::identity(n, n) * 0.1;
        let q = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let mut a = DMatrix::from_fn(m, n, |_, _| {
            if rng.random_bool(0.6) {
                rng.random_range(-1.0..1.0)
            } else {
                0.0
            }
        });
        for i in 0..m {
            if a.row(i).amax() == 0.0 {
                let j = rng.random_range(0..n);
                a[(i, j)] = 1.0;
            }
        }
        let feasible = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let ax = &a * &feasible;
        let mut l = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut equalities = 0;
        for i in 0..m {
            let kind: f64 = rng.random();
            // keep equality rows few enough to stay linearly independent
            if kind < 0.08 && equalities < n / 3 {
                equalities += 1;
                l[i] = ax[i];
                u[i] = ax[i];
            } else {
                l[i] = if kind < 0.25 { f64::NEG_INFINITY } else { ax[i] - rng.random_range(0.0..1.0) };
                u[i] = if kind > 0.85 { f64::INFINITY } else { ax[i] + rng.random_range(0.0..1.0) };
            }
        }
        Self { p, q, a, l, u, feasible }
    }

    /// Box-only problem `lo ≤ x ≤ hi` with `A = I`.
    pub fn random_box<R: Rng>(rng: &mut R, n: usize) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let p = g.transpose() * &g + DMatrix::identity(n, n) * 0.1;
        let q = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
        let l: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        Self { p, q, a: DMatrix::identity(n, n), l, u, feasible: DVector::zeros(n) }
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn p_upper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut t = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                if self.p[(i, j)] != 0.0 {
                    t.push((i, j, self.p[(i, j)]));
                }
            }
        }
        t
    }

    pub fn a_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..self.m() {
            for j in 0..self.n() {
                if self.a[(i, j)] != 0.0 {
                    t.push((i, j, self.a[(i, j)]));
                }
            }
        }
        t
    }
}

/// One-sided constraint `cᵀx ≥ b`, tagged with its row and whether it is an equality.
struct Row {
    c: DVector<f64>,
    b: f64,
    eq: bool,
}

fn one_sided_rows(qp: &DenseQp) -> Vec<Row> {
    let mut rows = Vec::new();
    for i in 0..qp.m() {
        let a = qp.a.row(i).transpose();
        if qp.l[i] == qp.u[i] {
            rows.push(Row { c: a, b: qp.l[i], eq: true });
            continue;
        }
        if qp.l[i].is_finite() {
            rows.push(Row { c: a.clone(), b: qp.l[i], eq: false });
        }
        if qp.u[i].is_finite() {
            rows.push(Row { c: -a, b: -qp.u[i], eq: false });
        }
    }
    rows
}

/// Solves `[P Wᵀ; W 0] [p; μ] = [−g; 0]`.
fn eqp(p: &DMatrix<f64>, g: &DVector<f64>, rows: &[&Row]) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = p.nrows();
    let k = rows.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(p);
    for (r, row) in rows.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = row.c[j];
            kkt[(j, n + r)] = row.c[j];
        }
    }
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-g));
    let sol = kkt.lu().solve(&rhs)?;
    Some((sol.rows(0, n).into_owned(), sol.rows(n, k).into_owned()))
}

/// Primal active-set method started from the problem's known feasible point.
pub fn active_set_solve(qp: &DenseQp) -> DVector<f64> {
    let rows = one_sided_rows(qp);
    let mut x = qp.feasible.clone();
    let mut working: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].eq).collect();
    for _ in 0..10_000 {
        let g = &qp.p * &x + &qp.q;
        let w: Vec<&Row> = working.iter().map(|&i| &rows[i]).collect();
        let (step, mu) = eqp(&qp.p, &g, &w).expect("working set is linearly independent");
        if step.amax() < 1e-12 * (1.0 + x.amax()) {
            // multipliers λ = −μ must be non-negative on inequalities
            let worst = working
                .iter()
                .enumerate()
                .filter(|(_, &i)| !rows[i].eq)
                .map(|(pos, _)| (pos, -mu[pos]))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match worst {
                Some((pos, lam)) if lam < -1e-12 => {
                    working.remove(pos);
                }
                _ => return x,
            }
        } else {
            let mut alpha = 1.0;
            let mut blocking = None;
            for (i, row) in rows.iter().enumerate() {
                if working.contains(&i) {
                    continue;
                }
                let cp = row.c.dot(&step);
                if cp < -1e-14 {
                    let a = ((row.c.dot(&x) - row.b) / -cp).max(0.0);
                    if a < alpha {
                        alpha = a;
                        blocking = Some(i);
                    }
                }
            }
            x += step * alpha;
            if let Some(i) = blocking {
                working.push(i);
            }
        }
    }
    panic!("active-set oracle did not terminate");
}

/// Enumerates every lower/free/upper assignment of a box QP and returns the
/// unique assignment whose equality-constrained minimizer satisfies the KKT signs.
pub fn brute_force_box(qp: &DenseQp) -> DVector<f64> {
    let n = qp.n();
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let mut x = DVector::zeros(n);
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        for i in 0..n {
            match state[i] {
                0 => x[i] = qp.l[i],
                2 => x[i] = qp.u[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            let k = free.len();
            let pff = DMatrix::from_fn(k, k, |a, b| qp.p[(free[a], free[b])]);
            let mut rhs = DVector::from_fn(k, |a, _| -qp.q[free[a]]);
            for a in 0..k {
                for j in 0..n {
                    if state[j] != 1 {
                        rhs[a] -= qp.p[(free[a], j)] * x[j];
                    }
                }
            }
            let xf = pff.cholesky().expect("P is positive definite").solve(&rhs);
            for a in 0..k {
                x[free[a]] = xf[a];
            }
        }
        let tol = 1e-10;
        let grad = &qp.p * &x + &qp.q;
        let ok = (0..n).all(|i| match state[i] {
            1 => x[i] >= qp.l[i] - tol && x[i] <= qp.u[i] + tol,
            0 => grad[i] >= -tol,
            _ => grad[i] <= tol,
        });
        if ok {
            return x;
        }
    }
    panic!("no KKT point found");
}
