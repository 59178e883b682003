//! Compressed sparse row storage and the linear-operator abstraction used by
//! the Lanczos solver.

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Rows shorter than this are multiplied sequentially.
const PAR_MIN_ROWS: usize = 512;

/// Anything that can multiply by a vector and by its transpose.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = A^T x`
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);
    /// Materialize as a dense matrix.
    fn to_dense(&self) -> DMatrix<f64>;
}

/// CSR matrix. `values == None` means every stored entry equals one.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Option<Vec<f64>>,
}

impl CsrMatrix {
    /// Builds a binary matrix from `(row, col)` pairs. Duplicates collapse to one entry.
    pub fn from_pattern(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize)>) -> Self {
        entries.sort_unstable();
        entries.dedup();
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        for &(r, c) in &entries {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) out of bounds");
            row_ptr[r + 1] += 1;
            col_idx.push(c as u32);
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: None,
        }
    }

    /// Builds a real matrix from triplets; duplicate coordinates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx: Vec<u32> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in entries {
            assert!(r < nrows && c < ncols, "entry ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c as u32);
            values.push(v);
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values: Some(values),
        }
    }

    /// Assembles directly from CSR arrays. Column indices within a row must be sorted.
    pub(crate) fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        values: Option<Vec<f64>>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn is_binary(&self) -> bool {
        self.values.is_none()
    }

    /// Column indices of row `r`.
    pub fn row_indices(&self, r: usize) -> impl Iterator<Item = usize> + '_ {
        self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
            .iter()
            .map(|&c| c as usize)
    }

    /// `(col, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        let vals = self.values.as_ref().map(|v| &v[range.clone()]);
        self.col_idx[range]
            .iter()
            .enumerate()
            .map(move |(i, &c)| (c as usize, vals.map_or(1.0, |v| v[i])))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let slice = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match slice.binary_search(&(c as u32)) {
            Ok(pos) => self
                .values
                .as_ref()
                .map_or(1.0, |v| v[self.row_ptr[r] + pos]),
            Err(_) => 0.0,
        }
    }

    /// Iterates over all stored `(row, col, value)` triplets in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = self.values.as_ref().map(|_| vec![0.0; self.nnz()]);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k] as usize;
                let dst = next[c];
                next[c] += 1;
                col_idx[dst] = r as u32;
                if let (Some(out), Some(src)) = (values.as_mut(), self.values.as_ref()) {
                    out[dst] = src[k];
                }
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `y = self * x`, rows processed in parallel. Each row sums in a fixed
    /// order so the result does not depend on scheduling.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row_dot = |r: usize| -> f64 {
            let range = self.row_ptr[r]..self.row_ptr[r + 1];
            match &self.values {
                None => self.col_idx[range].iter().map(|&c| x[c as usize]).sum(),
                Some(v) => self.col_idx[range.clone()]
                    .iter()
                    .zip(&v[range])
                    .map(|(&c, &a)| a * x[c as usize])
                    .sum(),
            }
        };
        if self.nrows >= PAR_MIN_ROWS {
            y.par_iter_mut().enumerate().for_each(|(r, out)| *out = row_dot(r));
        } else {
            y.iter_mut().enumerate().for_each(|(r, out)| *out = row_dot(r));
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Indices of rows with no stored entries.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.nrows)
            .filter(|&r| self.row_ptr[r] == self.row_ptr[r + 1])
            .collect()
    }
}

/// A CSR matrix paired with its transpose so both products run row-parallel.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    forward: CsrMatrix,
    backward: CsrMatrix,
}

impl SparseOperator {
    pub fn new(matrix: CsrMatrix) -> Self {
        let backward = matrix.transpose();
        Self {
            forward: matrix,
            backward,
        }
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.forward
    }
}

impl LinearOperator for SparseOperator {
    fn nrows(&self) -> usize {
        self.forward.nrows
    }
    fn ncols(&self) -> usize {
        self.forward.ncols
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.forward.mul_vec(x, y)
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.backward.mul_vec(x, y)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.forward.to_dense()
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }
    fn ncols(&self) -> usize {
        self.ncols()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (m, n) = self.shape();
        for (r, out) in y.iter_mut().enumerate().take(m) {
            *out = (0..n).map(|c| self[(r, c)] * x[c]).sum();
        }
    }
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        for (c, out) in y.iter_mut().enumerate() {
            *out = self.column(c).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_dedups_and_sorts() {
        let m = CsrMatrix::from_pattern(3, 3, vec![(2, 1), (0, 2), (0, 1), (0, 2)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row_indices(0).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(m.get(2, 1), 1.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.empty_rows(), vec![1]);
    }

    #[test]
    fn transpose_and_products_match_dense() {
        let m = CsrMatrix::from_triplets(
            3,
            4,
            vec![(0, 0, 1.5), (0, 3, -2.0), (2, 1, 4.0), (1, 2, 0.5), (2, 1, 1.0)],
        );
        let dense = m.to_dense();
        assert_eq!(dense[(2, 1)], 5.0);
        assert_eq!(m.transpose().to_dense(), dense.transpose());

        let op = SparseOperator::new(m);
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut y = [0.0; 3];
        op.apply(&x, &mut y);
        let expect = &dense * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y.as_slice(), expect.as_slice());

        let w = [1.0, -1.0, 2.0];
        let mut z = [0.0; 4];
        op.apply_transpose(&w, &mut z);
        let expect = dense.transpose() * nalgebra::DVector::from_column_slice(&w);
        assert_eq!(z.as_slice(), expect.as_slice());
    }
}
