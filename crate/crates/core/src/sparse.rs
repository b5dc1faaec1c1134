//! Compressed sparse row storage for fixed synaptic matrices.
//!
//! Rows are presynaptic neurons and columns are postsynaptic neurons, so a
//! spiking source neuron scatters its whole row into the target currents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from per-row `(col, value)` lists. Columns within a row
    /// must be strictly increasing.
    pub fn from_rows(rows: usize, cols: usize, entries: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        if entries.len() != rows {
            return Err(Error::DimensionMismatch {
                context: "sparse rows",
                expected: rows,
                actual: entries.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in entries {
            let mut last: Option<u32> = None;
            for (c, v) in row {
                if c as usize >= cols || last.is_some_and(|l| l >= c) {
                    return Err(Error::InvalidConfig(format!(
                        "sparse column {c} out of order or out of range (cols = {cols})"
                    )));
                }
                last = Some(c);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Reassembles a matrix from raw CSR arrays, validating their structure.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |m: &str| Error::Container(format!("malformed sparse matrix: {m}"));
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(bad("row pointer length"));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(bad("entry count"));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("row pointers not monotone"));
        }
        for r in 0..rows {
            let row = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if row.iter().any(|&c| c as usize >= cols) || row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("column indices"));
            }
        }
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&(c as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates over `(row, col, value)` for every stored entry.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals)
                .map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    /// Adds `sign * row(r)` into `acc`, offsetting column indices by `offset`.
    #[inline]
    pub fn scatter_row(&self, r: usize, sign: f64, acc: &mut [f64], offset: usize) {
        let (cols, vals) = self.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            acc[offset + c as usize] += sign * v;
        }
    }

    /// Mean number of stored entries per column (fan-in of each target).
    pub fn mean_fan_in(&self) -> f64 {
        if self.cols == 0 {
            0.0
        } else {
            self.nnz() as f64 / self.cols as f64
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.iter() {
            out[r][c] = v;
        }
        out
    }

    /// Boolean support of `self * other`, as a row-major `rows x other.cols` mask.
    pub fn product_support(&self, other: &SparseMatrix) -> Vec<bool> {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut mask = vec![false; self.rows * other.cols];
        for r in 0..self.rows {
            let (mid, _) = self.row(r);
            for &k in mid {
                let (targets, _) = other.row(k as usize);
                for &c in targets {
                    mask[r * other.cols + c as usize] = true;
                }
            }
        }
        mask
    }
}
