//! Envelope (skyline) LDLᵀ factorization with reverse Cuthill–McKee ordering.
//!
//! The receding-horizon problems have a block-banded reduced KKT matrix, so
//! after RCM the envelope is narrow and a dense-in-envelope factorization is
//! both simple and fast. Works for SPD and quasi-definite matrices; no pivoting.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct EnvelopeLdl {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    first: Vec<usize>,
    rowstart: Vec<usize>,
    /// Row-major envelope storage; holds A before `factor`, L and D after.
    values: Vec<f64>,
    work: Vec<f64>,
}

/// Reverse Cuthill–McKee ordering of an undirected graph. Returns `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut nbrs: Vec<usize> = Vec::new();

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited node");
        let start = pseudo_peripheral(adj, &degree, seed);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Repeated BFS towards the deepest, lowest-degree node of the component.
fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut start = seed;
    let mut depth = 0;
    for _ in 0..4 {
        let levels = bfs_levels(adj, start);
        let max_level = levels.iter().filter_map(|l| *l).max().unwrap_or(0);
        let candidate = (0..adj.len())
            .filter(|&v| levels[v] == Some(max_level))
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(start);
        if max_level <= depth {
            break;
        }
        depth = max_level;
        start = candidate;
    }
    start
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    level[start] = Some(0);
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        let lv = level[v].unwrap_or(0);
        for &w in &adj[v] {
            if level[w].is_none() {
                level[w] = Some(lv + 1);
                queue.push_back(w);
            }
        }
    }
    level
}

impl EnvelopeLdl {
    /// Symbolic analysis of a symmetric pattern given as index pairs (either triangle).
    pub fn analyze(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for (i, j) in entries {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (old, list) in adj.iter().enumerate() {
            let r = iperm[old];
            for &nb in list {
                let c = iperm[nb];
                if c < first[r] {
                    first[r] = c;
                }
            }
        }
        let mut rowstart = Vec::with_capacity(n + 1);
        let mut total = 0;
        for (i, &f) in first.iter().enumerate() {
            rowstart.push(total);
            total += i - f + 1;
        }
        rowstart.push(total);
        Self {
            n,
            perm,
            iperm,
            first,
            rowstart,
            values: vec![0.0; total],
            work: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored envelope entries (including the diagonal).
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c <= r && c >= self.first[r], "entry outside analysed envelope");
        self.rowstart[r] + c - self.first[r]
    }

    /// Adds `v` to the symmetric entry `(i, j)` (original indices). Off-diagonal
    /// entries must be added once, not once per triangle.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (pi, pj) = (self.iperm[i], self.iperm[j]);
        let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
        let s = self.slot(r, c);
        self.values[s] += v;
    }

    /// Numeric factorization in place. On failure returns the (original) index of
    /// the first zero or non-finite pivot.
    pub fn factor(&mut self) -> Result<(), usize> {
        for i in 0..self.n {
            let fi = self.first[i];
            let (done, row_i) = self.values.split_at_mut(self.rowstart[i]);
            // c_ij = a_ij - sum_k c_ik L_jk, stored in place of a_ij
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let rj = &done[self.rowstart[j] + k0 - fj..self.rowstart[j] + j - fj];
                let dot: f64 = row_i[k0 - fi..j - fi]
                    .iter()
                    .zip(rj)
                    .map(|(a, b)| a * b)
                    .sum();
                row_i[j - fi] -= dot;
            }
            let mut d = row_i[i - fi];
            for j in fi..i {
                let dj = done[self.rowstart[j] + j - self.first[j]];
                let c = row_i[j - fi];
                let l = c / dj;
                row_i[j - fi] = l;
                d -= c * l;
            }
            if d == 0.0 || !d.is_finite() {
                return Err(self.perm[i]);
            }
            row_i[i - fi] = d;
        }
        Ok(())
    }

    /// Diagonal pivots of the factorization, in factorization order.
    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.values[self.rowstart[i] + i - self.first[i]])
    }

    /// Solves `K x = b` in place (original ordering).
    pub fn solve(&mut self, b: &mut [f64]) {
        let n = self.n;
        let x = &mut self.work;
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let fi = self.first[i];
            let base = self.rowstart[i] - fi;
            let row = &self.values[base + fi..base + i];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, xv)| l * xv).sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.values[self.rowstart[i] + i - self.first[i]];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let base = self.rowstart[i] - fi;
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = &self.values[base + fi..base + i];
            for (xk, l) in x[fi..i].iter_mut().zip(row) {
                *xk -= l * xi;
            }
        }
        for i in 0..n {
            b[self.perm[i]] = x[i];
        }
    }
}
