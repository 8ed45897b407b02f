//! Test problem generators.

mod tomo;

pub use tomo::{disk_phantom, ray_intersections, tomo_line_matrix, tomo_noisy_rhs};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};
use crate::partition::RngStream;
use crate::theory;

/// Generator name, numeric parameters and seed; enough to regenerate an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub generator: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub x_star: Option<Vec<f64>>,
    /// `‖b_N‖`, the norm of the part of `b` outside the range of `A`.
    pub b_n_norm: f64,
    pub descriptor: Descriptor,
}

/// Orthonormalizes the columns of a col-major `rows x cols` matrix in place
/// (modified Gram-Schmidt, two passes).
fn orthonormalize(rows: usize, cols: usize, q: &mut [f64]) -> Result<()> {
    for j in 0..cols {
        for _ in 0..2 {
            for k in 0..j {
                let (head, tail) = q.split_at_mut(j * rows);
                let qk = &head[k * rows..(k + 1) * rows];
                let qj = &mut tail[..rows];
                let c = dot(qk, qj);
                qj.iter_mut().zip(qk).for_each(|(v, u)| *v -= c * u);
            }
        }
        let col = &mut q[j * rows..(j + 1) * rows];
        let nrm = norm(col);
        if nrm <= 1e-12 {
            return Err(Error::data("random basis is numerically rank deficient"));
        }
        col.iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(())
}

/// Dense `A = U D V^T` with orthonormal `U` (`m x r`), `V` (`n x r`) and
/// `D` uniform on `[1, kappa]`.
pub fn synthetic_udv(m: usize, n: usize, r: usize, kappa: f64, seed: u64) -> Result<Matrix> {
    if m == 0 || n == 0 || r == 0 || r > m.min(n) {
        return Err(Error::usage(format!("need 1 <= r <= min(m, n), got m={m} n={n} r={r}")));
    }
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(Error::usage(format!("kappa must exceed 1, got {kappa}")));
    }
    let mut rng = RngStream::substream(seed, 0);
    let mut u = rng.gaussian_vec(m * r);
    let mut v = rng.gaussian_vec(n * r);
    orthonormalize(m, r, &mut u)?;
    orthonormalize(n, r, &mut v)?;
    let d: Vec<f64> = (0..r).map(|_| 1.0 + (kappa - 1.0) * rng.uniform()).collect();
    let mut data = vec![0.0; m * n];
    for j in 0..n {
        let col = &mut data[j * m..(j + 1) * m];
        for k in 0..r {
            let c = d[k] * v[k * n + j];
            col.iter_mut().zip(&u[k * m..(k + 1) * m]).for_each(|(a, uk)| *a += c * uk);
        }
    }
    Matrix::from_col_major(m, n, data)
}

/// First unit vector of the form `(I - U U^T) e_i`, orthogonal to the range of `A`.
pub(crate) fn null_direction(a: &Matrix) -> Result<Vec<f64>> {
    let m = a.rows();
    let svd = a.thin_svd(None)?;
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        for _ in 0..2 {
            let p = svd.project_range(&v);
            v.iter_mut().zip(&p).for_each(|(x, y)| *x -= y);
        }
        let nrm = norm(&v);
        if nrm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= nrm);
            return Ok(v);
        }
    }
    Err(Error::data("the null space of A^T is trivial; cannot add null-space noise"))
}

/// `x* = A^† b~` for Gaussian `b~`, and `b = A x* + delta * b^` with `b^` a
/// unit vector in the null space of `A^T`.
pub fn noisy_rhs(a: &Matrix, delta: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::usage("noise level must be a finite nonnegative number"));
    }
    let mut rng = RngStream::substream(seed, 1);
    let bt = rng.gaussian_vec(a.rows());
    let x_star = theory::min_norm_lsq(a, &bt)?;
    let mut b = a.matvec(&x_star, false)?;
    if delta > 0.0 {
        let bh = null_direction(a)?;
        b.iter_mut().zip(&bh).for_each(|(b, h)| *b += delta * h);
    }
    Ok((b, x_star))
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn udv_instance(m: usize, n: usize, r: usize, kappa: f64, delta: f64, seed: u64) -> Result<ProblemInstance> {
    let a = synthetic_udv(m, n, r, kappa, seed)?;
    let (b, x_star) = noisy_rhs(&a, delta, seed)?;
    Ok(ProblemInstance {
        a,
        b,
        x_star: Some(x_star),
        b_n_norm: delta,
        descriptor: Descriptor {
            generator: "udv".into(),
            params: params(&[("m", m as f64), ("n", n as f64), ("r", r as f64), ("kappa", kappa), ("delta", delta)]),
            seed,
        },
    })
}

/// The `m = 30 n`, `r = n / 2`, `kappa = n / 10` family.
pub fn example1(n: usize, delta: f64, seed: u64) -> Result<ProblemInstance> {
    if n < 11 {
        return Err(Error::usage(format!("example1 needs n >= 11 so that kappa > 1, got {n}")));
    }
    let mut inst = udv_instance(30 * n, n, n / 2, n as f64 / 10.0, delta, seed)?;
    inst.descriptor.generator = "example1".into();
    Ok(inst)
}

/// Tomography instance with a disk phantom and unit null-space noise.
pub fn tomography(n: usize, num_angles: usize, rays_per_angle: usize, seed: u64) -> Result<ProblemInstance> {
    let (a, x_star) = tomo_line_matrix(n, num_angles, rays_per_angle)?;
    let b = tomo_noisy_rhs(&a, &x_star)?;
    Ok(ProblemInstance {
        a,
        b,
        x_star: Some(x_star),
        b_n_norm: 1.0,
        descriptor: Descriptor {
            generator: "tomo".into(),
            params: params(&[("n", n as f64), ("angles", num_angles as f64), ("rays", rays_per_angle as f64)]),
            seed,
        },
    })
}
