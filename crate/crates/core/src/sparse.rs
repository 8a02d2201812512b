//! Compressed sparse row matrices.

use ndarray::{Array2, ArrayView2};

use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Csr {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from triplets. Duplicate coordinates are summed; columns within
    /// a row end up sorted.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Binary matrix from sorted, deduplicated column lists per row.
    pub fn from_pattern(cols: usize, pattern: &[Vec<usize>]) -> Self {
        let mut indptr = Vec::with_capacity(pattern.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for row in pattern {
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let values = vec![1.0; indices.len()];
        Csr {
            rows: pattern.len(),
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (c, v) = self.row(r);
            c.iter().zip(v).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.iter() {
            out[[r, c]] += v;
        }
        out
    }

    pub fn transpose(&self) -> Csr {
        let trip: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Csr::from_triplets(self.cols, self.rows, &trip)
    }

    pub fn scale(&self, s: f64) -> Csr {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self * dense`.
    pub fn matmul_dense(&self, dense: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(self.cols, dense.nrows(), "spmm inner dimension");
        let width = dense.ncols();
        let mut out = Array2::zeros((self.rows, width));
        for (r, mut out_row) in out.rows_mut().into_iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &dense.row(c));
            }
        }
        out
    }

    /// `self^T * dense`, without materializing the transpose.
    pub fn t_matmul_dense(&self, dense: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(self.rows, dense.nrows(), "spmm^T inner dimension");
        let mut out = Array2::zeros((self.cols, dense.ncols()));
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            let src = dense.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.row_mut(c).scaled_add(v, &src);
            }
        }
        out
    }

    /// Boolean product pattern: entry (i, j) is set iff some k has
    /// `self[i,k] != 0` and `other[k,j] != 0`. Rows are computed independently.
    pub fn bool_matmul(&self, other: &Csr, exec: Exec) -> Csr {
        assert_eq!(self.cols, other.rows, "boolean product inner dimension");
        let width = other.cols;
        let pattern = exec.map_range(self.rows, |r| {
            let mut mark = vec![false; width];
            let mut hits = Vec::new();
            for &k in self.row(r).0 {
                for &j in other.row(k).0 {
                    if !mark[j] {
                        mark[j] = true;
                        hits.push(j);
                    }
                }
            }
            hits.sort_unstable();
            hits
        });
        Csr::from_pattern(width, &pattern)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m = Csr::from_triplets(2, 3, &[(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 2, 0.5)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn spmm_matches_dense() {
        let m = Csr::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0)]);
        let d = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(m.matmul_dense(d.view()), m.to_dense().dot(&d));
        let g = array![[1.0, 0.5], [2.0, -1.0]];
        assert_eq!(m.t_matmul_dense(g.view()), m.to_dense().t().dot(&g));
        assert_eq!(m.transpose().to_dense(), m.to_dense().t());
    }

    #[test]
    fn boolean_product_is_reachability() {
        // path 0 - 1 - 2, both directions
        let a = Csr::from_pattern(3, &[vec![1], vec![0, 2], vec![1]]);
        for exec in [Exec::Sequential, Exec::Parallel] {
            let a2 = a.bool_matmul(&a, exec);
            assert_eq!(a2.row(0).0, &[0, 2]);
            assert_eq!(a2.row(1).0, &[1]);
        }
    }
}
