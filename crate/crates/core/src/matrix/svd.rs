//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! Deterministic: the rotation schedule is a fixed cyclic sweep over column
//! pairs, so identical inputs give bit-identical factors.

use super::{dot, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U diag(sigma) V^T` truncated to the
/// numerical rank.
#[derive(Clone, Debug)]
pub struct SvdFactor {
    rows: usize,
    cols: usize,
    /// `rows x rank`, column-major.
    u: Vec<f64>,
    /// `cols x rank`, column-major.
    v: Vec<f64>,
    sigma: Vec<f64>,
}

impl SvdFactor {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Retained singular values in nonincreasing order.
    pub fn singular_values(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_max(&self) -> Option<f64> {
        self.sigma.first().copied()
    }

    /// Smallest retained (nonzero) singular value.
    pub fn sigma_min(&self) -> Option<f64> {
        self.sigma.last().copied()
    }

    /// Left singular vector `k` (length `rows`).
    pub fn u_col(&self, k: usize) -> &[f64] {
        &self.u[k * self.rows..(k + 1) * self.rows]
    }

    /// Right singular vector `k` (length `cols`).
    pub fn v_col(&self, k: usize) -> &[f64] {
        &self.v[k * self.cols..(k + 1) * self.cols]
    }

    /// `A^+ b = V diag(1/sigma) U^T b`.
    pub fn pinv_apply(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows);
        let mut x = vec![0.0; self.cols];
        for k in 0..self.rank() {
            let c = dot(self.u_col(k), b) / self.sigma[k];
            for (xi, vi) in x.iter_mut().zip(self.v_col(k)) {
                *xi += c * vi;
            }
        }
        x
    }

    /// Orthogonal projection of `b` onto the range of `A`: `U U^T b`.
    pub fn project_range(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.rows);
        let mut p = vec![0.0; self.rows];
        for k in 0..self.rank() {
            let c = dot(self.u_col(k), b);
            for (pi, ui) in p.iter_mut().zip(self.u_col(k)) {
                *pi += c * ui;
            }
        }
        p
    }

    /// Orthogonal projection of `x` onto the row space of `A`: `V V^T x`.
    pub fn project_row_space(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        let mut p = vec![0.0; self.cols];
        for k in 0..self.rank() {
            let c = dot(self.v_col(k), x);
            for (pi, vi) in p.iter_mut().zip(self.v_col(k)) {
                *pi += c * vi;
            }
        }
        p
    }

    /// Dense reconstruction `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut data = vec![0.0; self.rows * self.cols];
        for k in 0..self.rank() {
            let (u, v, s) = (self.u_col(k), self.v_col(k), self.sigma[k]);
            for j in 0..self.cols {
                let c = s * v[j];
                for i in 0..self.rows {
                    data[j * self.rows + i] += u[i] * c;
                }
            }
        }
        Matrix::from_col_major(self.rows, self.cols, data).expect("valid dims")
    }
}

impl Matrix {
    /// Thin SVD truncated at `rank_tol * sigma_1`.
    ///
    /// `rank_tol` is relative; `None` uses `max(m, n) * f64::EPSILON`.
    pub fn thin_svd(&self, rank_tol: Option<f64>) -> Result<SvdFactor> {
        if !self.all_finite() {
            return Err(Error::data("matrix has non-finite entries"));
        }
        let (m, n) = (self.rows(), self.cols());
        let tol = rank_tol.unwrap_or(m.max(n) as f64 * f64::EPSILON);
        if tol < 0.0 || !tol.is_finite() {
            return Err(Error::usage("rank tolerance must be a finite nonnegative number"));
        }
        if m >= n {
            let (u, s, v) = jacobi(m, n, self.to_col_major());
            Ok(truncate(m, n, u, s, v, tol))
        } else {
            let t = self.transpose();
            let (u, s, v) = jacobi(n, m, t.to_col_major());
            // A^T = U S V^T  =>  A = V S U^T
            Ok(truncate(m, n, v, s, u, tol))
        }
    }
}

/// One-sided Jacobi on a tall `m x n` column-major matrix (`m >= n`).
/// Returns (U columns scaled to unit norm, sigma, V), unsorted.
fn jacobi(m: usize, n: usize, mut w: Vec<f64>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut norms: Vec<f64> = (0..n).map(|j| dot(&w[j * m..(j + 1) * m], &w[j * m..(j + 1) * m])).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&w[p * m..(p + 1) * m], &w[q * m..(q + 1) * m]);
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, m, p, q, c, s);
                rotate(&mut v, n, p, q, c, s);
                norms[p] = dot(&w[p * m..(p + 1) * m], &w[p * m..(p + 1) * m]);
                norms[q] = dot(&w[q * m..(q + 1) * m], &w[q * m..(q + 1) * m]);
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    for j in 0..n {
        if sigma[j] > 0.0 {
            for x in &mut w[j * m..(j + 1) * m] {
                *x /= sigma[j];
            }
        }
    }
    (w, sigma, v)
}

fn rotate(a: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = a.split_at_mut(q * len);
    let cp = &mut lo[p * len..(p + 1) * len];
    let cq = &mut hi[..len];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Sort by singular value, drop those below `tol * sigma_1`, and lay out
/// `U` with `rows` entries per column and `V` with `cols` entries per column.
fn truncate(rows: usize, cols: usize, u: Vec<f64>, s: Vec<f64>, v: Vec<f64>, tol: f64) -> SvdFactor {
    let k = s.len();
    let ulen = u.len() / k;
    let vlen = v.len() / k;
    debug_assert_eq!(ulen, rows);
    debug_assert_eq!(vlen, cols);
    let mut order: Vec<usize> = (0..k).collect();
    // stable sort keeps ties in column order
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
    let smax = order.first().map_or(0.0, |&i| s[i]);
    let keep: Vec<usize> = order.into_iter().filter(|&i| smax > 0.0 && s[i] > tol * smax).collect();

    let mut uu = Vec::with_capacity(keep.len() * rows);
    let mut vv = Vec::with_capacity(keep.len() * cols);
    let mut ss = Vec::with_capacity(keep.len());
    for &i in &keep {
        uu.extend_from_slice(&u[i * rows..(i + 1) * rows]);
        vv.extend_from_slice(&v[i * cols..(i + 1) * cols]);
        ss.push(s[i]);
    }
    SvdFactor { rows, cols, u: uu, v: vv, sigma: ss }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_column() {
        let f = Matrix::identity(2).unwrap().thin_svd(None).unwrap();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.singular_values(), &[1.0, 1.0]);

        let f = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap().thin_svd(None).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.singular_values()[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rank_deficient_two_by_two() {
        // Gram matrix [[2,2],[2,2]] has eigenvalues 4 and 0
        let f = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap().thin_svd(None).unwrap();
        assert_eq!(f.rank(), 1);
        assert!((f.singular_values()[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn wide_matrix_and_reconstruction() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![0.0, -1.0, 4.0]]).unwrap();
        let f = a.thin_svd(None).unwrap();
        assert_eq!(f.rank(), 2);
        assert_eq!(f.rows(), 2);
        assert_eq!(f.cols(), 3);
        let r = f.reconstruct();
        for (x, y) in r.to_col_major().iter().zip(a.to_col_major()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let f = Matrix::zeros(3, 2).unwrap().thin_svd(None).unwrap();
        assert_eq!(f.rank(), 0);
        assert_eq!(f.pinv_apply(&[1.0, 2.0, 3.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn nonfinite_is_data_error() {
        let a = Matrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap();
        assert!(matches!(a.thin_svd(None), Err(Error::Data(_))));
    }
}
