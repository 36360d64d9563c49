//! Compressed sparse row storage.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{NseError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on
/// compression, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Counting sort by row, then a stable sort by column within each row, so
    /// that duplicate sums are accumulated in a fixed order.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in &entries {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut sorted = vec![(0usize, 0.0f64); entries.len()];
        for &(r, c, v) in &entries {
            sorted[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(entries.len() / 2);
        let mut values = Vec::with_capacity(entries.len() / 2);
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut sorted[counts[r]..counts[r + 1]];
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
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

    /// Iterates `(col, value)` over row `r`.
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
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `y += A^T x`.
    pub fn mul_transpose_add(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for (r, &xr) in x.iter().enumerate() {
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
    }

    /// `z^T A w`.
    pub fn bilinear(&self, z: &[f64], w: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|r| z[r] * self.row(r).map(|(c, v)| v * w[c]).sum::<f64>())
            .sum()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut entries = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                entries.push((c, r, v));
            }
        }
        SparseMatrix::from_triplets(self.ncols, self.nrows, entries)
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Sum of matrices with identical shape.
    pub fn sum(parts: &[&SparseMatrix]) -> Result<SparseMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| NseError::InvalidArgument("empty matrix sum".into()))?;
        let (nr, nc) = (first.nrows, first.ncols);
        let mut entries = Vec::with_capacity(parts.iter().map(|m| m.nnz()).sum());
        for m in parts {
            if (m.nrows, m.ncols) != (nr, nc) {
                return Err(NseError::Dimension(format!(
                    "cannot add {}x{} to {nr}x{nc}",
                    m.nrows, m.ncols
                )));
            }
            for r in 0..nr {
                for (c, v) in m.row(r) {
                    entries.push((r, c, v));
                }
            }
        }
        Ok(SparseMatrix::from_triplets(nr, nc, entries))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entrywise difference `|A - A^T|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - t.get(r, c)).abs());
            }
            for (c, v) in t.row(r) {
                worst = worst.max((v - self.get(r, c)).abs());
            }
        }
        worst
    }

    /// Submatrix `A[rows, cols]`. `col_map[j]` gives the new column of old
    /// column `j`, or `usize::MAX` when dropped.
    pub fn extract(&self, rows: &[usize], col_map: &[usize], ncols: usize) -> SparseMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &r in rows {
            for (c, v) in self.row(r) {
                let nc = col_map[c];
                if nc != usize::MAX {
                    col_idx.push(nc);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        // col_map is monotone on kept columns, so rows stay sorted
        SparseMatrix {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Coordinate-format Matrix Market text with 1-based indices.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                let _ = writeln!(s, "{} {} {:.17e}", r + 1, c + 1, v);
            }
        }
        s
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_matrix_market())?;
        Ok(())
    }
}
