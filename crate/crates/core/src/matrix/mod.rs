//! Matrix storage, block kernels and dense helpers.
//!
//! Indices are 0-based everywhere in memory. Matrix Market files use 1-based
//! indices on disk; [`market`] converts at the boundary.
//!
//! All reductions sum left to right in index order so that results are
//! bit-stable for a given input.

pub mod market;
mod svd;

pub use svd::SvdFactor;

use crate::error::{Error, Result};

/// Which axis of a matrix a block or partition refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    /// Column-major values, `data[j * rows + i] = A[i, j]`.
    Dense(Vec<f64>),
    /// Compressed sparse rows plus a compressed-column mirror for column access.
    Csr {
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
        col_ptr: Vec<usize>,
        col_rows: Vec<usize>,
        col_values: Vec<f64>,
    },
}

/// A real `rows x cols` matrix stored densely (column-major) or as CSR.
///
/// Immutable after construction; every kernel is a pure function of its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    storage: Storage,
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::usage(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    Ok(())
}

impl Matrix {
    /// Dense matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::usage(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, storage: Storage::Dense(data) })
    }

    /// Dense matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        check_dims(m, n)?;
        let mut data = vec![0.0; m * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::usage(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                data[j * m + i] = v;
            }
        }
        Self::from_col_major(m, n, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_col_major(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_col_major(n, n, data)
    }

    /// CSR matrix from raw arrays. Column indices must be strictly increasing
    /// within each row.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        if indptr.len() != rows + 1 || indptr[0] != 0 {
            return Err(Error::usage("row pointer array must have rows + 1 entries starting at 0"));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != indices.len() {
            return Err(Error::usage("row pointers must end at nnz"));
        }
        for i in 0..rows {
            if indptr[i + 1] < indptr[i] {
                return Err(Error::usage("row pointers must be nondecreasing"));
            }
            let row = &indices[indptr[i]..indptr[i + 1]];
            for (k, &j) in row.iter().enumerate() {
                if j >= cols {
                    return Err(Error::usage(format!("column index {j} out of range in row {i}")));
                }
                if k > 0 && row[k - 1] >= j {
                    return Err(Error::usage(format!(
                        "column indices must be strictly increasing in row {i}"
                    )));
                }
            }
        }

        // compressed-column mirror
        let mut col_ptr = vec![0usize; cols + 1];
        for &j in &indices {
            col_ptr[j + 1] += 1;
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut fill = col_ptr.clone();
        let mut col_rows = vec![0usize; indices.len()];
        let mut col_values = vec![0.0; indices.len()];
        for i in 0..rows {
            for k in indptr[i]..indptr[i + 1] {
                let j = indices[k];
                col_rows[fill[j]] = i;
                col_values[fill[j]] = values[k];
                fill[j] += 1;
            }
        }

        Ok(Matrix {
            rows,
            cols,
            storage: Storage::Csr { indptr, indices, values, col_ptr, col_rows, col_values },
        })
    }

    /// CSR matrix from `(row, col, value)` triplets (0-based). Duplicate
    /// coordinates are rejected.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        check_dims(rows, cols)?;
        for &(i, j, _) in &triplets {
            if i >= rows || j >= cols {
                return Err(Error::usage(format!("entry ({i}, {j}) outside a {rows}x{cols} matrix")));
            }
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in triplets.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::usage(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
            }
        }
        let mut indptr = vec![0usize; rows + 1];
        for &(i, _, _) in &triplets {
            indptr[i + 1] += 1;
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        let indices = triplets.iter().map(|t| t.1).collect();
        let values = triplets.iter().map(|t| t.2).collect();
        Self::from_csr(rows, cols, indptr, indices, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Number of stored entries (all `rows * cols` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(d) => d.len(),
            Storage::Csr { values, .. } => values.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        match &self.storage {
            Storage::Dense(d) => d[j * self.rows + i],
            Storage::Csr { indptr, indices, values, .. } => {
                let row = &indices[indptr[i]..indptr[i + 1]];
                match row.binary_search(&j) {
                    Ok(k) => values[indptr[i] + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Column-major dense copy of the values.
    pub fn to_col_major(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(d) => d.clone(),
            Storage::Csr { indptr, indices, values, .. } => {
                let mut d = vec![0.0; self.rows * self.cols];
                for i in 0..self.rows {
                    for k in indptr[i]..indptr[i + 1] {
                        d[indices[k] * self.rows + i] = values[k];
                    }
                }
                d
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, storage: Storage::Dense(self.to_col_major()) }
    }

    /// CSR copy; explicit zeros of a dense matrix are dropped.
    pub fn to_csr(&self) -> Matrix {
        match &self.storage {
            Storage::Csr { .. } => self.clone(),
            Storage::Dense(d) => {
                let mut t = Vec::new();
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        let v = d[j * self.rows + i];
                        if v != 0.0 {
                            t.push((i, j, v));
                        }
                    }
                }
                Matrix::from_triplets(self.rows, self.cols, t).expect("dense matrix yields valid CSR")
            }
        }
    }

    /// Stored `(row, col, value)` entries in row-major order. Dense storage
    /// reports every entry including zeros.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match &self.storage {
            Storage::Dense(d) => {
                let mut t = Vec::with_capacity(d.len());
                for i in 0..self.rows {
                    for j in 0..self.cols {
                        t.push((i, j, d[j * self.rows + i]));
                    }
                }
                t
            }
            Storage::Csr { indptr, indices, values, .. } => {
                let mut t = Vec::with_capacity(values.len());
                for i in 0..self.rows {
                    for k in indptr[i]..indptr[i + 1] {
                        t.push((i, indices[k], values[k]));
                    }
                }
                t
            }
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t: Vec<(usize, usize, f64)> = Vec::new();
        match &self.storage {
            Storage::Dense(d) => {
                let mut out = vec![0.0; d.len()];
                for j in 0..self.cols {
                    for i in 0..self.rows {
                        out[i * self.cols + j] = d[j * self.rows + i];
                    }
                }
                return Matrix { rows: self.cols, cols: self.rows, storage: Storage::Dense(out) };
            }
            Storage::Csr { col_ptr, col_rows, col_values, .. } => {
                for j in 0..self.cols {
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        t.push((j, col_rows[k], col_values[k]));
                    }
                }
            }
        }
        Matrix::from_triplets(self.cols, self.rows, t).expect("transpose of valid CSR")
    }

    pub fn all_finite(&self) -> bool {
        match &self.storage {
            Storage::Dense(d) => d.iter().all(|v| v.is_finite()),
            Storage::Csr { values, .. } => values.iter().all(|v| v.is_finite()),
        }
    }

    /// Sum of squared entries.
    pub fn frobenius_norm_sq(&self) -> f64 {
        let vals = match &self.storage {
            Storage::Dense(d) => d,
            Storage::Csr { values, .. } => values,
        };
        vals.iter().fold(0.0, |acc, v| acc + v * v)
    }

    /// Squared Euclidean norm of every row.
    pub fn row_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        match &self.storage {
            Storage::Dense(d) => {
                for i in 0..self.rows {
                    let mut s = 0.0;
                    for j in 0..self.cols {
                        let v = d[j * self.rows + i];
                        s += v * v;
                    }
                    out[i] = s;
                }
            }
            Storage::Csr { indptr, values, .. } => {
                for i in 0..self.rows {
                    out[i] = values[indptr[i]..indptr[i + 1]].iter().fold(0.0, |a, v| a + v * v);
                }
            }
        }
        out
    }

    /// Squared Euclidean norm of row `i`.
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => (0..self.cols).fold(0.0, |s, j| {
                let v = d[j * self.rows + i];
                s + v * v
            }),
            Storage::Csr { indptr, values, .. } => {
                values[indptr[i]..indptr[i + 1]].iter().fold(0.0, |a, v| a + v * v)
            }
        }
    }

    /// Squared Euclidean norm of column `j`.
    pub fn col_norm_sq(&self, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[j * self.rows..(j + 1) * self.rows].iter().fold(0.0, |a, v| a + v * v),
            Storage::Csr { col_ptr, col_values, .. } => {
                col_values[col_ptr[j]..col_ptr[j + 1]].iter().fold(0.0, |a, v| a + v * v)
            }
        }
    }

    /// Squared Euclidean norm of every column.
    pub fn col_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        match &self.storage {
            Storage::Dense(d) => {
                for j in 0..self.cols {
                    out[j] = d[j * self.rows..(j + 1) * self.rows].iter().fold(0.0, |a, v| a + v * v);
                }
            }
            Storage::Csr { col_ptr, col_values, .. } => {
                for j in 0..self.cols {
                    out[j] = col_values[col_ptr[j]..col_ptr[j + 1]].iter().fold(0.0, |a, v| a + v * v);
                }
            }
        }
        out
    }

    /// `A v`, or `A^T v` when `transposed`.
    pub fn matvec(&self, v: &[f64], transposed: bool) -> Result<Vec<f64>> {
        let (want, len) = if transposed { (self.rows, self.cols) } else { (self.cols, self.rows) };
        if v.len() != want {
            return Err(Error::usage(format!(
                "vector of length {} does not match a {}x{} matrix{}",
                v.len(),
                self.rows,
                self.cols,
                if transposed { " (transposed)" } else { "" }
            )));
        }
        let mut out = vec![0.0; len];
        if transposed {
            self.mul_t_into(v, &mut out);
        } else {
            self.mul_into(v, &mut out);
        }
        Ok(out)
    }

    /// `out = A v` without dimension checks beyond debug assertions.
    pub fn mul_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        match &self.storage {
            Storage::Dense(d) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for j in 0..self.cols {
                    let vj = v[j];
                    let col = &d[j * self.rows..(j + 1) * self.rows];
                    for (o, a) in out.iter_mut().zip(col) {
                        *o += a * vj;
                    }
                }
            }
            Storage::Csr { indptr, indices, values, .. } => {
                for i in 0..self.rows {
                    let mut s = 0.0;
                    for k in indptr[i]..indptr[i + 1] {
                        s += values[k] * v[indices[k]];
                    }
                    out[i] = s;
                }
            }
        }
    }

    /// `out = A^T v`.
    pub fn mul_t_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        match &self.storage {
            Storage::Dense(d) => {
                for j in 0..self.cols {
                    let col = &d[j * self.rows..(j + 1) * self.rows];
                    out[j] = col.iter().zip(v).fold(0.0, |a, (c, x)| a + c * x);
                }
            }
            Storage::Csr { col_ptr, col_rows, col_values, .. } => {
                for j in 0..self.cols {
                    let mut s = 0.0;
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        s += col_values[k] * v[col_rows[k]];
                    }
                    out[j] = s;
                }
            }
        }
    }

    /// `out[k] = A[rows[k], :] . x`
    pub fn row_block_mul(&self, rows: &[usize], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(rows.len(), out.len());
        match &self.storage {
            Storage::Dense(d) => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (j, &xj) in x.iter().enumerate() {
                    let col = &d[j * self.rows..(j + 1) * self.rows];
                    for (o, &i) in out.iter_mut().zip(rows) {
                        *o += col[i] * xj;
                    }
                }
            }
            Storage::Csr { indptr, indices, values, .. } => {
                for (o, &i) in out.iter_mut().zip(rows) {
                    let mut s = 0.0;
                    for k in indptr[i]..indptr[i + 1] {
                        s += values[k] * x[indices[k]];
                    }
                    *o = s;
                }
            }
        }
    }

    /// `out += alpha * sum_k coeffs[k] * A[rows[k], :]^T`
    pub fn row_block_t_axpy(&self, rows: &[usize], coeffs: &[f64], alpha: f64, out: &mut [f64]) {
        debug_assert_eq!(rows.len(), coeffs.len());
        match &self.storage {
            Storage::Dense(d) => {
                for (j, o) in out.iter_mut().enumerate() {
                    let col = &d[j * self.rows..(j + 1) * self.rows];
                    let s = rows.iter().zip(coeffs).fold(0.0, |a, (&i, c)| a + col[i] * c);
                    *o += alpha * s;
                }
            }
            Storage::Csr { indptr, indices, values, .. } => {
                for (&i, &c) in rows.iter().zip(coeffs) {
                    let ac = alpha * c;
                    for k in indptr[i]..indptr[i + 1] {
                        out[indices[k]] += ac * values[k];
                    }
                }
            }
        }
    }

    /// `out[k] = A[:, cols[k]] . y`
    pub fn col_block_t_mul(&self, cols: &[usize], y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(cols.len(), out.len());
        match &self.storage {
            Storage::Dense(d) => {
                for (o, &j) in out.iter_mut().zip(cols) {
                    let col = &d[j * self.rows..(j + 1) * self.rows];
                    *o = col.iter().zip(y).fold(0.0, |a, (c, v)| a + c * v);
                }
            }
            Storage::Csr { col_ptr, col_rows, col_values, .. } => {
                for (o, &j) in out.iter_mut().zip(cols) {
                    let mut s = 0.0;
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        s += col_values[k] * y[col_rows[k]];
                    }
                    *o = s;
                }
            }
        }
    }

    /// `out += alpha * sum_k coeffs[k] * A[:, cols[k]]`
    pub fn col_block_axpy(&self, cols: &[usize], coeffs: &[f64], alpha: f64, out: &mut [f64]) {
        debug_assert_eq!(cols.len(), coeffs.len());
        match &self.storage {
            Storage::Dense(d) => {
                for i in 0..self.rows {
                    let s = cols.iter().zip(coeffs).fold(0.0, |a, (&j, c)| a + d[j * self.rows + i] * c);
                    out[i] += alpha * s;
                }
            }
            Storage::Csr { col_ptr, col_rows, col_values, .. } => {
                for (&j, &c) in cols.iter().zip(coeffs) {
                    let ac = alpha * c;
                    for k in col_ptr[j]..col_ptr[j + 1] {
                        out[col_rows[k]] += ac * col_values[k];
                    }
                }
            }
        }
    }

    /// Squared Frobenius norm of the submatrix on the given rows or columns.
    pub fn block_norm_sq(&self, axis: Axis, idx: &[usize]) -> f64 {
        match axis {
            Axis::Rows => {
                let norms = self.row_norms_sq();
                idx.iter().fold(0.0, |a, &i| a + norms[i])
            }
            Axis::Cols => {
                let norms = self.col_norms_sq();
                idx.iter().fold(0.0, |a, &j| a + norms[j])
            }
        }
    }

    /// Dense copy of `A[idx, :]` (rows) or `A[:, idx]` (cols).
    pub fn block(&self, axis: Axis, idx: &[usize]) -> Matrix {
        match axis {
            Axis::Rows => {
                let r = idx.len();
                let mut data = vec![0.0; r * self.cols];
                for (k, &i) in idx.iter().enumerate() {
                    for j in 0..self.cols {
                        data[j * r + k] = self.get_fast(i, j);
                    }
                }
                Matrix { rows: r, cols: self.cols, storage: Storage::Dense(data) }
            }
            Axis::Cols => {
                let c = idx.len();
                let mut data = vec![0.0; self.rows * c];
                for (k, &j) in idx.iter().enumerate() {
                    for i in 0..self.rows {
                        data[k * self.rows + i] = self.get_fast(i, j);
                    }
                }
                Matrix { rows: self.rows, cols: c, storage: Storage::Dense(data) }
            }
        }
    }

    fn get_fast(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[j * self.rows + i],
            _ => self.get(i, j),
        }
    }

    /// Dense `A^T A` (`cols x cols`).
    pub fn gram_cols(&self) -> Matrix {
        let n = self.cols;
        let dense = self.to_col_major();
        let m = self.rows;
        let mut g = vec![0.0; n * n];
        for a in 0..n {
            let ca = &dense[a * m..(a + 1) * m];
            for b in a..n {
                let cb = &dense[b * m..(b + 1) * m];
                let s = ca.iter().zip(cb).fold(0.0, |acc, (x, y)| acc + x * y);
                g[b * n + a] = s;
                g[a * n + b] = s;
            }
        }
        Matrix { rows: n, cols: n, storage: Storage::Dense(g) }
    }

    /// Dense `A A^T` (`rows x rows`).
    pub fn gram_rows(&self) -> Matrix {
        self.transpose().to_dense().gram_cols()
    }

    /// Column slice `A[:, j]` for dense storage.
    pub(crate) fn dense_at(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(d) => d[j * self.rows + i],
            Storage::Csr { .. } => self.get(i, j),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc, x| acc + x * x)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + (x - y) * (x - y)).sqrt()
}
