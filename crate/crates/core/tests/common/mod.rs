//! Independent reference computations for the integration tests. Nothing
//! here calls the library's SVD; spectra come from a cyclic Jacobi
//! eigensolver on Gram matrices.

#![allow(dead_code)]

use rowsolve::{Axis, Matrix, Partition};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    norm_sq(&sub(a, b))
}

/// Row-major dense copy.
pub fn rows_of(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| (0..a.cols()).map(|j| a.get(i, j)).collect()).collect()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| dot(r, x)).collect()
}

pub fn matvec_t(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let n = a.first().map_or(0, |r| r.len());
    let mut out = vec![0.0; n];
    for (r, &yi) in a.iter().zip(y) {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v * yi;
        }
    }
    out
}

/// `A^T A` for row-major `a`.
pub fn gram(a: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; n]; n];
    for r in a {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += r[i] * r[j];
            }
        }
    }
    g
}

/// Eigenvalues and eigenvectors (as columns `v[..][k]`) of a symmetric matrix.
pub fn sym_eig(mut s: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = s.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| s[i][j] * s[i][j]).sum();
        let diag: f64 = (0..n).map(|i| s[i][i] * s[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let (skp, skq) = (s[k][p], s[k][q]);
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let (spk, sqk) = (s[p][k], s[q][k]);
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - sn * vq;
                    row[q] = sn * vp + c * vq;
                }
            }
        }
    }
    ((0..n).map(|i| s[i][i]).collect(), v)
}

/// Nonzero squared singular values of `a` (relative cut `1e-10`), descending.
pub fn sigma_sq(a: &[Vec<f64>], n: usize) -> Vec<f64> {
    let (mut ev, _) = sym_eig(gram(a, n));
    ev.sort_by(|x, y| y.total_cmp(x));
    let top = ev.first().copied().unwrap_or(0.0).max(0.0);
    ev.into_iter().filter(|&l| l > 1e-10 * top).collect()
}

/// `A^† b` through the eigenpairs of `A^T A`.
pub fn pinv_solve(a: &[Vec<f64>], n: usize, b: &[f64]) -> Vec<f64> {
    let (ev, v) = sym_eig(gram(a, n));
    let top = ev.iter().cloned().fold(0.0, f64::max);
    let atb = matvec_t(a, b);
    let mut x = vec![0.0; n];
    for k in 0..n {
        if ev[k] > 1e-10 * top {
            let vk: Vec<f64> = (0..n).map(|i| v[i][k]).collect();
            let c = dot(&vk, &atb) / ev[k];
            x.iter_mut().zip(&vk).for_each(|(xi, vi)| *xi += c * vi);
        }
    }
    x
}

/// Rate constants evaluated block by block from Gram eigenvalues.
pub struct Rates {
    pub rho1: f64,
    pub rho2: f64,
    pub beta_max_i: f64,
    pub beta_max_j: f64,
    pub beta_min_i: f64,
    pub frob_sq: f64,
    pub s: usize,
}

fn block_extremes(a: &Matrix, p: &Partition, axis: Axis) -> Vec<(f64, f64, f64)> {
    let full = rows_of(a);
    p.blocks()
        .iter()
        .filter_map(|idx| {
            let blk: Vec<Vec<f64>> = match axis {
                Axis::Rows => idx.iter().map(|&i| full[i].clone()).collect(),
                Axis::Cols => full.iter().map(|r| idx.iter().map(|&j| r[j]).collect()).collect(),
            };
            let n = blk[0].len();
            let f: f64 = blk.iter().map(|r| norm_sq(r)).sum();
            if f == 0.0 {
                return None;
            }
            let s = sigma_sq(&blk, n);
            Some((s[0], *s.last().unwrap(), f))
        })
        .collect()
}

pub fn rates(a: &Matrix, rows: &Partition, cols: &Partition) -> Rates {
    let full = rows_of(a);
    let s = sigma_sq(&full, a.cols());
    let smin = *s.last().unwrap();
    let frob_sq: f64 = full.iter().map(|r| norm_sq(r)).sum();
    let bi = block_extremes(a, rows, Axis::Rows);
    let bj = block_extremes(a, cols, Axis::Cols);
    let beta_max_i = bi.iter().map(|(mx, _, f)| mx / f).fold(0.0, f64::max);
    let beta_min_i = bi.iter().map(|(_, mn, f)| mn / f).fold(f64::INFINITY, f64::min);
    let beta_max_j = bj.iter().map(|(mx, _, f)| mx / f).fold(0.0, f64::max);
    Rates {
        rho1: 1.0 - smin / (beta_max_i * frob_sq),
        rho2: 1.0 - smin / (beta_max_j * frob_sq),
        beta_max_i,
        beta_max_j,
        beta_min_i,
        frob_sq,
        s: rows.len(),
    }
}

pub fn partitions(a: &Matrix, tr: usize, tc: usize) -> (Partition, Partition) {
    (
        Partition::contiguous(a.rows(), tr).unwrap().attach_norms(a, Axis::Rows).unwrap(),
        Partition::contiguous(a.cols(), tc).unwrap().attach_norms(a, Axis::Cols).unwrap(),
    )
}

/// Gaussian matrix from a simple xorshift + Box-Muller source, independent of the library RNG.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        ((self.0 >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn gaussian(&mut self) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }
}

/// Dense `m x n` matrix of rank `r` (product of Gaussian factors).
pub fn low_rank(m: usize, n: usize, r: usize, rng: &mut Lcg) -> Matrix {
    let l: Vec<Vec<f64>> = (0..m).map(|_| rng.gaussian_vec(r)).collect();
    let rt: Vec<Vec<f64>> = (0..r).map(|_| rng.gaussian_vec(n)).collect();
    let rows: Vec<Vec<f64>> =
        l.iter().map(|li| (0..n).map(|j| (0..r).map(|k| li[k] * rt[k][j]).sum()).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}
