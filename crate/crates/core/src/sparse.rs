//! Compressed sparse column matrices.
//!
//! Two construction paths are provided and they deliberately differ:
//!
//! * [`CscMatrix::from_triplets`] follows the semantics of Matlab's
//!   `sparse(I,J,K,m,n)`: zero values are ignored, duplicates are summed, and
//!   positions whose sum cancels to exactly zero are not stored.
//! * [`CscMatrix::add`] inserts one entry at a time. A new position shifts the
//!   tails of the value and row-index arrays by one slot and bumps every
//!   following column pointer, so a fresh insertion costs O(nnz). Explicit
//!   zeros are kept.
//!
//! Duplicates in a triplet list are summed in input order, which makes the
//! two paths produce bit-identical values when fed the same stream.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{invalid, Result};

/// Largest dense expansion `to_dense` will allocate.
pub const MAX_DENSE_ENTRIES: usize = 100_000_000;

/// Integer types usable as triplet indices.
pub trait SpIndex: Copy {
    fn index(self) -> usize;
}

impl SpIndex for usize {
    #[inline]
    fn index(self) -> usize {
        self
    }
}

impl SpIndex for u32 {
    #[inline]
    fn index(self) -> usize {
        self as usize
    }
}

/// Sparse matrix in compressed sparse column form.
///
/// Column `j` owns `row_idx[col_ptr[j]..col_ptr[j+1]]` and the matching
/// `values`; row indices are strictly increasing within a column.
#[derive(Clone, PartialEq)]
pub struct CscMatrix {
    n_rows: usize,
    n_cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl fmt::Debug for CscMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CscMatrix")
            .field("shape", &(self.n_rows, self.n_cols))
            .field("nnz", &self.nnz())
            .finish()
    }
}

impl CscMatrix {
    /// An empty `n_rows × n_cols` matrix, ready for incremental insertion.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        CscMatrix { n_rows, n_cols, col_ptr: vec![0; n_cols + 1], row_idx: Vec::new(), values: Vec::new() }
    }

    /// Wraps raw CSC arrays after checking the structural invariants.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let m = CscMatrix { n_rows, n_cols, col_ptr, row_idx, values };
        m.check_invariants()?;
        Ok(m)
    }

    /// Builds a matrix from `(rows[t], cols[t], vals[t])` triplets.
    ///
    /// Zero values are skipped, duplicates are summed in input order and
    /// positions summing to exactly `0.0` are dropped.
    pub fn from_triplets<I: SpIndex>(
        n_rows: usize,
        n_cols: usize,
        rows: &[I],
        cols: &[I],
        vals: &[f64],
    ) -> Result<Self> {
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return invalid(format!(
                "triplet arrays differ in length: {} rows, {} cols, {} values",
                rows.len(),
                cols.len(),
                vals.len()
            ));
        }
        if n_rows > u32::MAX as usize {
            return invalid(format!("{n_rows} rows exceed the supported range"));
        }

        // count stored entries per column
        let mut col_start = vec![0usize; n_cols + 1];
        for (t, ((&r, &c), &v)) in rows.iter().zip(cols).zip(vals).enumerate() {
            let (r, c) = (r.index(), c.index());
            if r >= n_rows || c >= n_cols {
                return invalid(format!(
                    "triplet {t}: index ({r}, {c}) out of range for a {n_rows}x{n_cols} matrix"
                ));
            }
            if v != 0.0 {
                col_start[c + 1] += 1;
            }
        }
        for c in 0..n_cols {
            col_start[c + 1] += col_start[c];
        }
        let total = col_start[n_cols];

        // stable scatter into column buckets
        let mut buf_row = vec![0u32; total];
        let mut buf_val = vec![0f64; total];
        let mut next = col_start[..n_cols].to_vec();
        for ((&r, &c), &v) in rows.iter().zip(cols).zip(vals) {
            if v != 0.0 {
                let c = c.index();
                let p = next[c];
                buf_row[p] = r.index() as u32;
                buf_val[p] = v;
                next[c] = p + 1;
            }
        }
        drop(next);

        // fold duplicates in input order, compacting in place: mark[r] holds the
        // last column that stored row r and its output slot there
        let mut mark = vec![(usize::MAX, 0usize); n_rows];
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        let mut col_ptr = vec![0usize; n_cols + 1];
        let mut out = 0usize;
        for c in 0..n_cols {
            let begin = out;
            for p in col_start[c]..col_start[c + 1] {
                let (r, v) = (buf_row[p], buf_val[p]);
                let (mc, m) = mark[r as usize];
                if mc == c {
                    buf_val[m] += v;
                } else {
                    mark[r as usize] = (c, out);
                    buf_row[out] = r;
                    buf_val[out] = v;
                    out += 1;
                }
            }
            sort_unique(&mut buf_row[begin..out], &mut buf_val[begin..out], &mut scratch);
            let mut kept = begin;
            for p in begin..out {
                if buf_val[p] != 0.0 {
                    buf_row[kept] = buf_row[p];
                    buf_val[kept] = buf_val[p];
                    kept += 1;
                }
            }
            out = kept;
            col_ptr[c + 1] = out;
        }
        drop(col_start);

        buf_val.truncate(out);
        buf_val.shrink_to_fit();
        let row_idx = buf_row[..out].iter().map(|&r| r as usize).collect();
        Ok(CscMatrix { n_rows, n_cols, col_ptr, row_idx, values: buf_val })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Number of stored entries, explicit zeros included.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_rows || j >= self.n_cols {
            return invalid(format!(
                "index ({i}, {j}) out of range for a {}x{} matrix",
                self.n_rows, self.n_cols
            ));
        }
        Ok(())
    }

    /// Adds `v` to entry `(i, j)`, inserting a new slot if the position is
    /// not stored yet. Zero values are stored as well.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_index(i, j)?;
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        match self.row_idx[s..e].binary_search(&i) {
            Ok(p) => self.values[s + p] += v,
            Err(p) => {
                let pos = s + p;
                self.row_idx.insert(pos, i);
                self.values.insert(pos, v);
                for c in &mut self.col_ptr[j + 1..] {
                    *c += 1;
                }
            }
        }
        Ok(())
    }

    /// `M(row_ids[a], col_ids[b]) += block[a][b]` through repeated [`add`](Self::add).
    pub fn add_block<const R: usize, const C: usize>(
        &mut self,
        row_ids: &[usize; R],
        col_ids: &[usize; C],
        block: &[[f64; C]; R],
    ) -> Result<()> {
        if let Some(&i) = row_ids.iter().find(|&&i| i >= self.n_rows) {
            return invalid(format!("row index {i} out of range ({} rows)", self.n_rows));
        }
        if let Some(&j) = col_ids.iter().find(|&&j| j >= self.n_cols) {
            return invalid(format!("column index {j} out of range ({} columns)", self.n_cols));
        }
        for (a, &i) in row_ids.iter().enumerate() {
            for (b, &j) in col_ids.iter().enumerate() {
                self.add(i, j, block[a][b])?;
            }
        }
        Ok(())
    }

    /// Value at `(i, j)`, `0.0` when the position is not stored.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        self.check_index(i, j)?;
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        Ok(match self.row_idx[s..e].binary_search(&i) {
            Ok(p) => self.values[s + p],
            Err(_) => 0.0,
        })
    }

    /// Iterates over stored entries as `(row, col, value)` in column order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_cols).flat_map(move |j| {
            let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
            (s..e).map(move |p| (self.row_idx[p], j, self.values[p]))
        })
    }

    /// Copy without the stored entries equal to `0.0`.
    pub fn pruned(&self) -> CscMatrix {
        let mut col_ptr = Vec::with_capacity(self.n_cols + 1);
        let mut row_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        col_ptr.push(0);
        for j in 0..self.n_cols {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[p] != 0.0 {
                    row_idx.push(self.row_idx[p]);
                    values.push(self.values[p]);
                }
            }
            col_ptr.push(values.len());
        }
        CscMatrix { n_rows: self.n_rows, n_cols: self.n_cols, col_ptr, row_idx, values }
    }

    /// Largest stored magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Verifies the CSC structural invariants.
    pub fn check_invariants(&self) -> Result<()> {
        let cp = &self.col_ptr;
        if cp.len() != self.n_cols + 1 || cp[0] != 0 {
            return invalid("column pointer array malformed");
        }
        if cp[self.n_cols] != self.row_idx.len() || self.row_idx.len() != self.values.len() {
            return invalid("column pointer end does not match stored entries");
        }
        for j in 0..self.n_cols {
            if cp[j] > cp[j + 1] {
                return invalid(format!("column pointer decreases at column {j}"));
            }
            let rows = &self.row_idx[cp[j]..cp[j + 1]];
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("row indices of column {j} not strictly increasing"));
            }
            if rows.last().is_some_and(|&r| r >= self.n_rows) {
                return invalid(format!("row index out of range in column {j}"));
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if self.n_rows.saturating_mul(self.n_cols) > MAX_DENSE_ENTRIES {
            return invalid(format!("{}x{} is too large to expand densely", self.n_rows, self.n_cols));
        }
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        Ok(d)
    }

    /// max |A − B| over all positions, absent entries counting as zero.
    pub fn max_abs_diff(&self, other: &CscMatrix) -> Result<f64> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            ));
        }
        let mut diff = 0.0f64;
        for j in 0..self.n_cols {
            let (mut p, pe) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let (mut q, qe) = (other.col_ptr[j], other.col_ptr[j + 1]);
            while p < pe || q < qe {
                let rp = if p < pe { self.row_idx[p] } else { usize::MAX };
                let rq = if q < qe { other.row_idx[q] } else { usize::MAX };
                let d = if rp == rq {
                    p += 1;
                    q += 1;
                    self.values[p - 1] - other.values[q - 1]
                } else if rp < rq {
                    p += 1;
                    self.values[p - 1]
                } else {
                    q += 1;
                    other.values[q - 1]
                };
                diff = diff.max(d.abs());
            }
        }
        Ok(diff)
    }

    /// Writes `%%MatrixMarket matrix coordinate real general` with 1-based indices.
    pub fn write_matrix_market_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        for (i, j, v) in self.iter() {
            writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_matrix_market_to(&mut out)?;
        out.flush()?;
        Ok(())
    }
}

/// Sorts a column segment with distinct row indices.
fn sort_unique(rows: &mut [u32], vals: &mut [f64], scratch: &mut Vec<(u32, f64)>) {
    if rows.len() <= 32 {
        for a in 1..rows.len() {
            let (r, v) = (rows[a], vals[a]);
            let mut b = a;
            while b > 0 && rows[b - 1] > r {
                rows[b] = rows[b - 1];
                vals[b] = vals[b - 1];
                b -= 1;
            }
            rows[b] = r;
            vals[b] = v;
        }
        return;
    }
    scratch.clear();
    scratch.extend(rows.iter().copied().zip(vals.iter().copied()));
    scratch.sort_unstable_by_key(|e| e.0);
    for (p, &(r, v)) in scratch.iter().enumerate() {
        rows[p] = r;
        vals[p] = v;
    }
}

/// Row-major dense matrix, used for element blocks and test oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix { n_rows, n_cols, data: vec![0.0; n_rows * n_cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        DenseMatrix { n_rows, n_cols, data: rows.concat() }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Result<f64> {
        if (self.n_rows, self.n_cols) != (other.n_rows, other.n_cols) {
            return invalid("shape mismatch");
        }
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.n_rows && j < self.n_cols);
        &self.data[i * self.n_cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        assert!(i < self.n_rows && j < self.n_cols);
        &mut self.data[i * self.n_cols + j]
    }
}
