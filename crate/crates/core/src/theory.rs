//! Rate constants, bounds, the minimum-norm oracle and the two spectral lemmas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{norm, Axis, Matrix};
use crate::partition::{Partition, RngStream};

/// Blocks whose smaller side exceeds this use power iteration for `σ_max`.
const DENSE_BLOCK_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rho1: f64,
    pub rho2: f64,
    pub beta_max_i: f64,
    pub beta_max_j: f64,
    pub beta_min_i: f64,
    /// Smallest nonzero singular value of `A`, squared.
    pub sigma_min_sq: f64,
    pub frob_sq: f64,
    /// Number of row blocks.
    pub s: usize,
    /// Number of column blocks.
    pub t: usize,
    pub degenerate: bool,
}

impl RateReport {
    /// `max(rho1, rho2)`, the extended method's rate.
    pub fn rho(&self) -> f64 {
        self.rho1.max(self.rho2)
    }
}

fn block_sigma_max_sq(block: &Matrix) -> Result<f64> {
    if block.rows().min(block.cols()) <= DENSE_BLOCK_LIMIT {
        return Ok(block.thin_svd(None)?.sigma_max().map_or(0.0, |s| s * s));
    }
    // power iteration on B^T B
    let n = block.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = block.matvec(&block.matvec(&v, false)?, true)?;
        let nw = norm(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        let next = nw;
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= 1e-10 * next {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}

fn block_ratios(a: &Matrix, p: &Partition, axis: Axis) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(p.len());
    for idx in p.blocks() {
        let nsq = a.block_norm_sq(axis, idx);
        if nsq == 0.0 {
            continue;
        }
        let blk = a.block(axis, idx);
        out.push((blk.thin_svd(None).map(|f| f.sigma_min().unwrap_or(0.0))?, block_sigma_max_sq(&blk)?, nsq));
    }
    Ok(out)
}

/// `max_i σ²_max(block_i) / ‖block_i‖²_F` over the nonzero blocks.
pub fn beta_max(a: &Matrix, p: &Partition, axis: Axis) -> Result<f64> {
    let mut best = 0.0f64;
    for idx in p.blocks() {
        let nsq = a.block_norm_sq(axis, idx);
        if nsq == 0.0 {
            continue;
        }
        best = best.max(block_sigma_max_sq(&a.block(axis, idx))? / nsq);
    }
    if best == 0.0 {
        return Err(Error::data("matrix is zero; rates are undefined"));
    }
    Ok(best)
}

/// `min_i σ²_min(block_i) / ‖block_i‖²_F`, with `σ_min` the smallest nonzero value.
pub fn beta_min(a: &Matrix, p: &Partition, axis: Axis) -> Result<f64> {
    let r = block_ratios(a, p, axis)?;
    if r.is_empty() {
        return Err(Error::data("matrix is zero; rates are undefined"));
    }
    Ok(r.iter().map(|(smin, _, nsq)| smin * smin / nsq).fold(f64::INFINITY, f64::min))
}

pub fn convergence_rates(a: &Matrix, rows: &Partition, cols: &Partition) -> Result<RateReport> {
    if rows.universe() != a.rows() || cols.universe() != a.cols() {
        return Err(Error::usage("partition sizes do not match the matrix"));
    }
    let frob_sq = a.frobenius_norm_sq();
    if frob_sq == 0.0 {
        return Err(Error::data("matrix is zero; rates are undefined"));
    }
    let smin = a.thin_svd(None)?.sigma_min().expect("nonzero matrix has rank >= 1");
    let sigma_min_sq = smin * smin;
    let row_r = block_ratios(a, rows, Axis::Rows)?;
    let beta_max_i = row_r.iter().map(|(_, smax, nsq)| smax / nsq).fold(0.0, f64::max);
    let beta_min_i = row_r.iter().map(|(s, _, nsq)| s * s / nsq).fold(f64::INFINITY, f64::min);
    let beta_max_j = beta_max(a, cols, Axis::Cols)?;
    let rho1 = (1.0 - sigma_min_sq / (beta_max_i * frob_sq)).max(0.0);
    let rho2 = (1.0 - sigma_min_sq / (beta_max_j * frob_sq)).max(0.0);
    let degenerate = (rho1 - rho2).abs() <= 1e-12 * rho1.max(rho2);
    Ok(RateReport {
        rho1,
        rho2,
        beta_max_i,
        beta_max_j,
        beta_min_i,
        sigma_min_sq,
        frob_sq,
        s: rows.len(),
        t: cols.len(),
        degenerate,
    })
}

/// `‖x0 - x*‖² + s / |ρ1 - ρ2| · ‖y0 - b_N‖² / (‖A‖²_F β^I_min)`.
pub fn omega_constant(report: &RateReport, x0_err_sq: f64, y0_err_sq: f64, s: usize, frob_sq: f64) -> Result<f64> {
    if report.degenerate {
        return Err(Error::Unsupported("the bound needs rho1 != rho2".into()));
    }
    if !(x0_err_sq >= 0.0 && y0_err_sq >= 0.0 && frob_sq > 0.0) {
        return Err(Error::usage("omega inputs must be nonnegative"));
    }
    let gap = (report.rho1 - report.rho2).abs();
    Ok(x0_err_sq + s as f64 / gap * y0_err_sq / (frob_sq * report.beta_min_i))
}

/// Smallest `k` with `k >= ln(ω / (ε (1 - β))) / (1 - ρ)`.
pub fn iteration_bound(rho: f64, omega: f64, epsilon: f64, beta: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::usage(format!("rho must lie in [0, 1), got {rho}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::usage("epsilon and beta must lie in (0, 1)"));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::usage("omega must be a finite nonnegative number"));
    }
    if omega == 0.0 {
        return Ok(0);
    }
    let v = (omega / (epsilon * (1.0 - beta))).ln() / (1.0 - rho);
    if v <= 0.0 {
        return Ok(0);
    }
    let near = v.round();
    let v = if (v - near).abs() <= 1e-9 * near.max(1.0) { near } else { v };
    Ok(v.ceil() as u64)
}

/// `A^† b`.
pub fn min_norm_lsq(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::usage("right-hand side length does not match the matrix"));
    }
    let svd = a.thin_svd(None)?;
    if svd.rank() == 0 {
        log::warn!("zero matrix: returning the zero solution");
    }
    Ok(svd.pinv_apply(b))
}

/// `(A A^† b, (I - A A^†) b)`.
pub fn range_null_split(a: &Matrix, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if b.len() != a.rows() {
        return Err(Error::usage("right-hand side length does not match the matrix"));
    }
    let br = a.thin_svd(None)?.project_range(b);
    let bn = b.iter().zip(&br).map(|(b, r)| b - r).collect();
    Ok((br, bn))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub trials: usize,
    /// `‖A^T u‖ >= σ_min ‖u‖` for `u` in the range of `A`.
    pub lower_violations: usize,
    /// `‖A A^T u‖ <= σ_max ‖A^T u‖`.
    pub upper_violations: usize,
    /// Smallest relative slack seen for each inequality.
    pub lower_worst_margin: f64,
    pub upper_worst_margin: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.lower_violations == 0 && self.upper_violations == 0
    }
}

pub const LEMMA_SLACK: f64 = 1e-10;

pub fn lemma_checks(a: &Matrix, trials: usize, rng: &mut RngStream) -> Result<LemmaReport> {
    let svd = a.thin_svd(None)?;
    let mut rep = LemmaReport {
        trials,
        lower_violations: 0,
        upper_violations: 0,
        lower_worst_margin: f64::INFINITY,
        upper_worst_margin: f64::INFINITY,
    };
    let (Some(smin), Some(smax)) = (svd.sigma_min(), svd.sigma_max()) else {
        return Ok(rep);
    };
    for _ in 0..trials {
        let v = rng.gaussian_vec(a.cols());
        let u = a.matvec(&v, false)?;
        let lhs = norm(&a.matvec(&u, true)?);
        let rhs = smin * norm(&u);
        if rhs > 0.0 {
            let margin = (lhs - rhs) / rhs;
            rep.lower_worst_margin = rep.lower_worst_margin.min(margin);
            if margin < -LEMMA_SLACK {
                rep.lower_violations += 1;
            }
        }

        let u = rng.gaussian_vec(a.rows());
        let atu = a.matvec(&u, true)?;
        let lhs = norm(&a.matvec(&atu, false)?);
        let rhs = smax * norm(&atu);
        if rhs > 0.0 {
            let margin = (rhs - lhs) / rhs;
            rep.upper_worst_margin = rep.upper_worst_margin.min(margin);
            if margin < -LEMMA_SLACK {
                rep.upper_violations += 1;
            }
        } else if lhs > 0.0 {
            rep.upper_violations += 1;
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parts(a: &Matrix, tr: usize, tc: usize) -> (Partition, Partition) {
        (
            Partition::contiguous(a.rows(), tr).unwrap().attach_norms(a, Axis::Rows).unwrap(),
            Partition::contiguous(a.cols(), tc).unwrap().attach_norms(a, Axis::Cols).unwrap(),
        )
    }

    #[test]
    fn identity_rates() {
        let a = Matrix::identity(2).unwrap();
        let (r, c) = parts(&a, 1, 1);
        let rep = convergence_rates(&a, &r, &c).unwrap();
        assert!((rep.beta_max_i - 1.0).abs() < 1e-12 && (rep.beta_max_j - 1.0).abs() < 1e-12);
        assert!((rep.rho1 - 0.5).abs() < 1e-12 && (rep.rho2 - 0.5).abs() < 1e-12);
        assert!(rep.degenerate);
    }

    #[test]
    fn column_vector_rates() {
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let (r, c) = parts(&a, 2, 1);
        let rep = convergence_rates(&a, &r, &c).unwrap();
        assert!((rep.sigma_min_sq - 2.0).abs() < 1e-12);
        assert!((rep.frob_sq - 2.0).abs() < 1e-12);
        assert!((rep.beta_max_i - 1.0).abs() < 1e-12);
        assert!(rep.rho1.abs() < 1e-12 && rep.rho2.abs() < 1e-12);
        assert!(matches!(omega_constant(&rep, 1.0, 1.0, rep.s, rep.frob_sq), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_matrix_rates() {
        let a = Matrix::zeros(3, 2).unwrap();
        let r = Partition::contiguous(3, 1).unwrap();
        let c = Partition::contiguous(2, 1).unwrap();
        assert!(matches!(convergence_rates(&a, &r, &c), Err(Error::Data(_))));
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = RngStream::new(3);
        let a = Matrix::from_col_major(80, 70, rng.gaussian_vec(5600)).unwrap();
        let s = a.thin_svd(None).unwrap().sigma_max().unwrap();
        let p = block_sigma_max_sq(&a).unwrap();
        assert!((p - s * s).abs() <= 1e-6 * s * s, "{p} vs {}", s * s);
    }

    #[test]
    fn omega_cases() {
        let rep = RateReport {
            rho1: 0.5,
            rho2: 0.7,
            beta_max_i: 1.0,
            beta_max_j: 1.0,
            beta_min_i: 0.25,
            sigma_min_sq: 1.0,
            frob_sq: 4.0,
            s: 3,
            t: 2,
            degenerate: false,
        };
        assert_eq!(omega_constant(&rep, 2.5, 0.0, 3, 4.0).unwrap(), 2.5);
        assert_eq!(omega_constant(&rep, 0.0, 0.0, 3, 4.0).unwrap(), 0.0);
        // 3 / 0.2 * 1 / (4 * 0.25) = 15
        assert!((omega_constant(&rep, 0.0, 1.0, 3, 4.0).unwrap() - 15.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_bound_cases() {
        assert_eq!(iteration_bound(0.5, 1.0, 1e-2, 0.9).unwrap(), 14);
        assert_eq!(iteration_bound(0.5, 1e-4, 1e-2, 0.9).unwrap(), 0);
        let e = std::f64::consts::E;
        assert_eq!(iteration_bound(0.0, e * 1e-2 * (1.0 - 0.9), 1e-2, 0.9).unwrap(), 1);
        assert!(iteration_bound(1.0, 1.0, 1e-2, 0.9).is_err());
        assert!(iteration_bound(0.5, 1.0, 0.0, 0.9).is_err());
        assert!(iteration_bound(0.5, 1.0, 1e-2, 1.0).is_err());
    }

    #[test]
    fn min_norm_cases() {
        let x = min_norm_lsq(&Matrix::identity(2).unwrap(), &[3.0, 4.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 4.0).abs() < 1e-12);
        let x = min_norm_lsq(&Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(), &[1.0, 0.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12);
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let x = min_norm_lsq(&a, &[2.0, 0.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12);
        assert_eq!(min_norm_lsq(&Matrix::zeros(2, 3).unwrap(), &[1.0, 1.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn split_cases() {
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let (br, bn) = range_null_split(&a, &[1.0, 0.0]).unwrap();
        assert!((br[0] - 0.5).abs() < 1e-12 && (br[1] - 0.5).abs() < 1e-12);
        assert!((bn[0] - 0.5).abs() < 1e-12 && (bn[1] + 0.5).abs() < 1e-12);
        let (br, bn) = range_null_split(&a, &[2.0, 2.0]).unwrap();
        assert!(bn.iter().all(|v| v.abs() < 1e-12) && (br[0] - 2.0).abs() < 1e-12);
        let (br, bn) = range_null_split(&a, &[0.0, 0.0]).unwrap();
        assert_eq!((br, bn), (vec![0.0; 2], vec![0.0; 2]));
    }

    #[test]
    fn lemmas_on_small_cases() {
        let mut rng = RngStream::new(1);
        let rep = lemma_checks(&Matrix::identity(2).unwrap(), 50, &mut rng).unwrap();
        assert!(rep.passed());
        assert!(rep.lower_worst_margin.abs() < 1e-12 && rep.upper_worst_margin.abs() < 1e-12);

        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let u = [0.0, 1.0];
        let atu = a.matvec(&u, true).unwrap();
        let smin = a.thin_svd(None).unwrap().sigma_min().unwrap();
        assert!((norm(&atu) - smin * norm(&u)).abs() < 1e-12);
        assert!(lemma_checks(&a, 100, &mut rng).unwrap().passed());
    }
}
