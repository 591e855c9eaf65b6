use std::io::{self, BufRead, Write};

use crate::csc::CscMatrix;
use crate::QpError;

/// Bound magnitude at or beyond which a bound is treated as infinite.
pub const INFTY: f64 = 1e30;

/// `min ½xᵀPx + qᵀx  s.t.  l ≤ Ax ≤ u`
///
/// `P` keeps only its upper triangle. Infinite bounds are stored as `±INFTY`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseQP {
    pub p: CscMatrix,
    pub q: Vec<f64>,
    pub a: CscMatrix,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
}

fn clamp_inf(v: f64) -> f64 {
    v.clamp(-INFTY, INFTY)
}

impl SparseQP {
    /// Assembles and validates a problem from triplets.
    ///
    /// Entries of `P` below the diagonal are rejected rather than silently mirrored.
    pub fn from_triplets(
        n: usize,
        p: &[(usize, usize, f64)],
        q: Vec<f64>,
        m: usize,
        a: &[(usize, usize, f64)],
        l: Vec<f64>,
        u: Vec<f64>,
    ) -> Result<Self, QpError> {
        if let Some(&(i, j, _)) = p.iter().find(|&&(i, j, _)| i > j) {
            return Err(QpError::LowerTriangleEntry { row: i, col: j });
        }
        if let Some(&(i, j, _)) = p.iter().find(|&&(i, j, _)| i >= n || j >= n) {
            return Err(QpError::IndexOutOfRange { row: i, col: j });
        }
        if let Some(&(i, j, _)) = a.iter().find(|&&(i, j, _)| i >= m || j >= n) {
            return Err(QpError::IndexOutOfRange { row: i, col: j });
        }
        let qp = Self {
            p: CscMatrix::from_triplets(n, n, p),
            q,
            a: CscMatrix::from_triplets(m, n, a),
            l: l.into_iter().map(clamp_inf).collect(),
            u: u.into_iter().map(clamp_inf).collect(),
        };
        qp.validate()?;
        Ok(qp)
    }

    pub fn n(&self) -> usize {
        self.p.ncols
    }

    pub fn m(&self) -> usize {
        self.a.nrows
    }

    /// Checks dimensions, finiteness and `l ≤ u`. Convexity is checked by the solver.
    pub fn validate(&self) -> Result<(), QpError> {
        let (n, m) = (self.n(), self.m());
        if self.p.nrows != n || self.a.ncols != n || self.q.len() != n {
            return Err(QpError::DimensionMismatch(format!(
                "P is {}x{}, A has {} columns, q has {} entries",
                self.p.nrows,
                self.p.ncols,
                self.a.ncols,
                self.q.len()
            )));
        }
        if self.l.len() != m || self.u.len() != m {
            return Err(QpError::DimensionMismatch(format!(
                "A has {m} rows but l, u have {} and {}",
                self.l.len(),
                self.u.len()
            )));
        }
        let finite = self.p.values.iter().chain(&self.a.values).chain(&self.q);
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(QpError::NonFinite);
        }
        for (i, (&lo, &hi)) in self.l.iter().zip(&self.u).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(QpError::InvalidBounds { row: i, lower: lo, upper: hi });
            }
        }
        Ok(())
    }

    /// Objective value `½xᵀPx + qᵀx`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut px = vec![0.0; self.n()];
        self.p.sym_upper_mul_vec(x, &mut px);
        x.iter()
            .zip(&px)
            .zip(&self.q)
            .map(|((xi, pxi), qi)| 0.5 * xi * pxi + qi * xi)
            .sum()
    }

    /// Writes the plain-text triplet dump:
    ///
    /// ```text
    /// n m
    /// P <nnz>
    /// i j v        (one line per stored entry)
    /// A <nnz>
    /// i j v
    /// q v0 v1 ...
    /// l v0 v1 ...
    /// u v0 v1 ...
    /// ```
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.n(), self.m())?;
        for (name, mat) in [("P", &self.p), ("A", &self.a)] {
            writeln!(w, "{name} {}", mat.nnz())?;
            for (i, j, v) in mat.triplets() {
                writeln!(w, "{i} {j} {v:e}")?;
            }
        }
        for (name, vec) in [("q", &self.q), ("l", &self.l), ("u", &self.u)] {
            write!(w, "{name}")?;
            for v in vec.iter() {
                write!(w, " {v:e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parses the format produced by [`SparseQP::write_triplets`].
    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self, QpError> {
        let mut lines = r.lines();
        let mut next_line = || -> Result<String, QpError> {
            lines
                .next()
                .ok_or_else(|| QpError::Parse("unexpected end of input".into()))?
                .map_err(|e| QpError::Parse(e.to_string()))
        };
        let header = next_line()?;
        let dims = parse_numbers::<usize>(&header)?;
        let [n, m] = dims[..] else {
            return Err(QpError::Parse(format!("bad header `{header}`")));
        };
        let mut mats = Vec::with_capacity(2);
        for name in ["P", "A"] {
            let line = next_line()?;
            let nnz = line
                .strip_prefix(name)
                .and_then(|rest| rest.trim().parse::<usize>().ok())
                .ok_or_else(|| QpError::Parse(format!("expected `{name} <nnz>`, got `{line}`")))?;
            let mut trip = Vec::with_capacity(nnz);
            for _ in 0..nnz {
                let line = next_line()?;
                let mut it = line.split_whitespace();
                let mut field = || it.next().ok_or_else(|| QpError::Parse(format!("short triplet `{line}`")));
                let i = field()?.parse::<usize>().map_err(|e| QpError::Parse(e.to_string()))?;
                let j = field()?.parse::<usize>().map_err(|e| QpError::Parse(e.to_string()))?;
                let v = field()?.parse::<f64>().map_err(|e| QpError::Parse(e.to_string()))?;
                trip.push((i, j, v));
            }
            mats.push(trip);
        }
        let mut vecs = Vec::with_capacity(3);
        for name in ["q", "l", "u"] {
            let line = next_line()?;
            let rest = line
                .strip_prefix(name)
                .ok_or_else(|| QpError::Parse(format!("expected `{name}` vector")))?;
            vecs.push(parse_numbers::<f64>(rest)?);
        }
        let u = vecs.pop().unwrap_or_default();
        let l = vecs.pop().unwrap_or_default();
        let q = vecs.pop().unwrap_or_default();
        Self::from_triplets(n, &mats[0], q, m, &mats[1], l, u)
    }
}

fn parse_numbers<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, QpError>
where
    T::Err: std::fmt::Display,
{
    s.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|e| QpError::Parse(format!("`{t}`: {e}"))))
        .collect()
}

/// Primal residual `‖clamp(Ax, l, u) − Ax‖∞` and dual residual `‖Px + q + Aᵀy‖∞`.
pub fn kkt_residuals(qp: &SparseQP, x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut ax = vec![0.0; qp.m()];
    qp.a.mul_vec(x, &mut ax);
    let primal = ax
        .iter()
        .zip(qp.l.iter().zip(&qp.u))
        .map(|(&v, (&lo, &hi))| (v.clamp(lo, hi) - v).abs())
        .fold(0.0, f64::max);

    let mut px = vec![0.0; qp.n()];
    qp.p.sym_upper_mul_vec(x, &mut px);
    let mut aty = vec![0.0; qp.n()];
    qp.a.tr_mul_vec(y, &mut aty);
    let dual = px
        .iter()
        .zip(&aty)
        .zip(&qp.q)
        .map(|((a, b), c)| (a + b + c).abs())
        .fold(0.0, f64::max);
    (primal, dual)
}
