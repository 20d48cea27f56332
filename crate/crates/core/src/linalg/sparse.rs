//! Compressed sparse row matrices.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assemble from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols_raw = vec![0usize; triplets.len()];
        let mut vals_raw = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = fill[r];
            cols_raw[k] = c;
            vals_raw[k] = v;
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..rows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols_raw[k], vals_raw[k])));
            scratch.sort_by_key(|x| x.0);
            for &(c, v) in &scratch {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterate `(col, value)` over row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (s, e) = (self.indptr[r], self.indptr[r + 1]);
        match self.indices[s..e].binary_search(&c) {
            Ok(k) => self.values[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (r, yr) in y.iter_mut().enumerate().take(self.rows) {
            let (s, e) = (self.indptr[r], self.indptr[r + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yr = acc;
        }
    }

    /// `Y = A X` where `X` is row-major `cols x k` and `Y` row-major `rows x k`.
    pub fn matmul_rowmajor(&self, x: &[f64], k: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.rows * k];
        for r in 0..self.rows {
            let out = &mut y[r * k..(r + 1) * k];
            for (c, v) in self.row(r) {
                let src = &x[c * k..(c + 1) * k];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        y
    }

    /// `Y += A^T G` for row-major `G` (`rows x k`), `Y` (`cols x k`).
    pub fn matmul_t_rowmajor_acc(&self, g: &[f64], k: usize, y: &mut [f64]) {
        for r in 0..self.rows {
            let src = &g[r * k..(r + 1) * k];
            for (c, v) in self.row(r) {
                let out = &mut y[c * k..(c + 1) * k];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<(usize, usize, f64)> = self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.cols, self.rows, &t)
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `self + s * I` (square matrices only).
    pub fn add_identity(&self, s: f64) -> Result<CsrMatrix> {
        if self.rows != self.cols {
            return Err(Error::Shape("add_identity on non-square matrix".into()));
        }
        let mut t = self.triplets();
        t.extend((0..self.rows).map(|i| (i, i, s)));
        Ok(CsrMatrix::from_triplets(self.rows, self.cols, &t))
    }

    /// Block-diagonal matrix with `copies` copies of `self`.
    pub fn block_diag(&self, copies: usize) -> CsrMatrix {
        if copies == 1 {
            return self.clone();
        }
        let mut indptr = Vec::with_capacity(self.rows * copies + 1);
        let mut indices = Vec::with_capacity(self.nnz() * copies);
        let mut values = Vec::with_capacity(self.nnz() * copies);
        indptr.push(0);
        for b in 0..copies {
            for r in 0..self.rows {
                for (c, v) in self.row(r) {
                    indices.push(c + b * self.cols);
                    values.push(v);
                }
                indptr.push(indices.len());
            }
        }
        CsrMatrix {
            rows: self.rows * copies,
            cols: self.cols * copies,
            indptr,
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] += v;
            }
        }
        d
    }

    /// Upper bound on the spectral radius via Gershgorin discs.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
