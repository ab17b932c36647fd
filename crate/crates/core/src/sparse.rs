//! Compressed sparse row matrices.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// CSR matrix with sorted, duplicate-free column indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from raw CSR arrays, validating the structural invariants.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 {
            return Err(Error::dims("csr row pointer", nrows + 1, row_ptr.len()));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != values.len() {
            return Err(Error::dims("csr values", col_idx.len(), values.len()));
        }
        for r in 0..nrows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(Error::InvalidParameter(format!("row pointer decreases at row {r}")));
            }
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!(
                    "columns of row {r} are not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::InvalidParameter(format!("column out of range in row {r}")));
            }
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from unordered triplets, summing duplicates and dropping nothing.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidParameter(format!("triplet ({r}, {c}) out of range")));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Same sparsity as `self`, all stored values zero.
    pub fn zeros_like(&self) -> Self {
        SparseMatrix {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, accumulating each row left to right.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "mat-vec input length");
        assert_eq!(y.len(), self.nrows, "mat-vec output length");
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *out = acc;
        }
    }

    /// `A B` for a dense `B` (column-major), one column at a time.
    pub fn mul_dense(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.ncols {
            return Err(Error::dims("sparse-dense product", self.ncols, b.nrows()));
        }
        let mut out = DMatrix::zeros(self.nrows, b.ncols());
        for j in 0..b.ncols() {
            let x = b.column(j);
            let mut y = out.column_mut(j);
            for r in 0..self.nrows {
                let mut acc = 0.0;
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[p] * x[self.col_idx[p]];
                }
                y[r] = acc;
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[p];
                col_idx[next[c]] = r;
                values[next[c]] = self.values[p];
                next[c] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Linear combination `sum_i w_i A_i` over operands of equal shape.
    ///
    /// Operands sharing one sparsity pattern are combined value by value;
    /// otherwise rows are merged.
    pub fn linear_combination(terms: &[(f64, &SparseMatrix)]) -> Result<SparseMatrix> {
        let Some(&(_, first)) = terms.first() else {
            return Err(Error::InvalidParameter("empty linear combination".into()));
        };
        for (_, m) in terms {
            if m.nrows != first.nrows {
                return Err(Error::dims("linear combination rows", first.nrows, m.nrows));
            }
            if m.ncols != first.ncols {
                return Err(Error::dims("linear combination cols", first.ncols, m.ncols));
            }
        }
        let same_pattern = terms
            .iter()
            .all(|(_, m)| m.row_ptr == first.row_ptr && m.col_idx == first.col_idx);
        if same_pattern {
            let mut out = first.zeros_like();
            for (w, m) in terms {
                for (o, v) in out.values.iter_mut().zip(&m.values) {
                    *o += w * v;
                }
            }
            return Ok(out);
        }

        let mut row_ptr = Vec::with_capacity(first.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..first.nrows {
            scratch.clear();
            for (w, m) in terms {
                scratch.extend(m.row(r).map(|(c, v)| (c, w * v)));
            }
            // stable sort keeps operand order for equal columns
            scratch.sort_by_key(|e| e.0);
            let start = col_idx.len();
            for &(c, v) in &scratch {
                if col_idx.len() > start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix {
            nrows: first.nrows,
            ncols: first.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                d[(r, c)] += v;
            }
        }
        d
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Coordinate text dump: `row col value` per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> Result<()> {
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {v:e}")?;
            }
        }
        Ok(())
    }
}
