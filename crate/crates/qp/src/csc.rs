//! Minimal compressed-sparse-column matrix.

/// Sparse matrix in compressed sparse column form.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed;
    /// row indices within each column end up sorted.
    ///
    /// Panics if a triplet lies outside the declared shape.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; ncols + 1];
        for &(i, j, _) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut rows = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let slot = next[j];
            rows[slot] = i;
            vals[slot] = v;
            next[j] += 1;
        }

        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowind = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        colptr.push(0);
        let mut col: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            col.clear();
            col.extend((counts[j]..counts[j + 1]).map(|k| (rows[k], vals[k])));
            col.sort_by_key(|&(i, _)| i);
            let mut k = 0;
            while k < col.len() {
                let (i, mut v) = col[k];
                k += 1;
                while k < col.len() && col[k].0 == i {
                    v += col[k].1;
                    k += 1;
                }
                rowind.push(i);
                values.push(v);
            }
            colptr.push(rowind.len());
        }
        Self {
            nrows,
            ncols,
            colptr,
            rowind,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            (self.colptr[j]..self.colptr[j + 1]).map(move |k| (self.rowind[k], j, self.values[k]))
        })
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.colptr[j]..self.colptr[j + 1] {
                y[self.rowind[k]] += self.values[k] * xj;
            }
        }
    }

    /// `y = Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for j in 0..self.ncols {
            let mut s = 0.0;
            for k in self.colptr[j]..self.colptr[j + 1] {
                s += self.values[k] * x[self.rowind[k]];
            }
            y[j] = s;
        }
    }

    /// `y = P x` where only the upper triangle of the symmetric `P` is stored.
    pub fn sym_upper_mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(self.nrows, self.ncols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[k];
                let v = self.values[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    /// Scales entry `(i, j)` by `row[i] * col[j]`.
    pub fn scale(&mut self, row: &[f64], col: &[f64]) {
        for j in 0..self.ncols {
            for k in self.colptr[j]..self.colptr[j + 1] {
                self.values[k] *= row[self.rowind[k]] * col[j];
            }
        }
    }

    /// Infinity norm of each column.
    pub fn col_inf_norms(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|j| {
                self.values[self.colptr[j]..self.colptr[j + 1]]
                    .iter()
                    .fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .collect()
    }

    /// Infinity norm of each row.
    pub fn row_inf_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.nrows];
        for (i, _, v) in self.triplets() {
            out[i] = out[i].max(v.abs());
        }
        out
    }

    /// Column infinity norms of the full symmetric matrix whose upper triangle is stored.
    pub fn sym_upper_col_inf_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.ncols];
        for (i, j, v) in self.triplets() {
            out[j] = out[j].max(v.abs());
            out[i] = out[i].max(v.abs());
        }
        out
    }

    pub fn transpose(&self) -> CscMatrix {
        let t: Vec<(usize, usize, f64)> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        CscMatrix::from_triplets(self.ncols, self.nrows, &t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.triplets().collect::<Vec<_>>(), vec![(0, 0, 4.0), (1, 0, 2.0)]);
    }

    #[test]
    fn products_match_dense() {
        // [1 2 0; 0 3 4]
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, 3.0), (1, 2, 4.0)]);
        let mut y = [0.0; 2];
        a.mul_vec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, [3.0, 7.0]);
        let mut z = [0.0; 3];
        a.tr_mul_vec(&[1.0, 2.0], &mut z);
        assert_eq!(z, [1.0, 8.0, 8.0]);
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn symmetric_upper_product() {
        // [2 1; 1 3] stored as upper triangle
        let p = CscMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]);
        let mut y = [0.0; 2];
        p.sym_upper_mul_vec(&[1.0, -1.0], &mut y);
        assert_eq!(y, [1.0, -2.0]);
        assert_eq!(p.sym_upper_col_inf_norms(), vec![2.0, 3.0]);
    }
}
