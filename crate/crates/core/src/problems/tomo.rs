//! Parallel-beam line integrals on an `N x N` pixel grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::null_direction;

/// Pixels crossed by the line `c + offset * (-sin θ, cos θ) + s (cos θ, sin θ)`,
/// `c` the grid center, with the length of each crossing. The grid covers
/// `[0, n]^2`; pixel `(row, col)` has index `row * n + col` with `row = floor(y)`.
pub fn ray_intersections(n: usize, theta: f64, offset: f64) -> Vec<(usize, f64)> {
    let nf = n as f64;
    let (dx, dy) = (theta.cos(), theta.sin());
    let (px, py) = (nf / 2.0 - offset * dy, nf / 2.0 + offset * dx);

    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < 1e-15 {
            if p <= 0.0 || p >= nf {
                return Vec::new();
            }
        } else {
            let (a, b) = ((0.0 - p) / d, (nf - p) / d);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    if hi - lo <= 1e-12 {
        return Vec::new();
    }

    let mut cuts = vec![lo, hi];
    for (p, d) in [(px, dx), (py, dy)] {
        if d.abs() < 1e-15 {
            continue;
        }
        for g in 1..n {
            let s = (g as f64 - p) / d;
            if s > lo && s < hi {
                cuts.push(s);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);

    let mut out: Vec<(usize, f64)> = Vec::new();
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let col = ((px + mid * dx).floor().max(0.0) as usize).min(n - 1);
        let row = ((py + mid * dy).floor().max(0.0) as usize).min(n - 1);
        let idx = row * n + col;
        match out.last_mut() {
            Some((last, l)) if *last == idx => *l += len,
            _ => out.push((idx, len)),
        }
    }
    out
}

/// Centered disk of value 1 (radius `n / 3`) on a zero background, row-major.
pub fn disk_phantom(n: usize) -> Vec<f64> {
    let c = n as f64 / 2.0;
    let r2 = (n as f64 / 3.0).powi(2);
    let mut x = vec![0.0; n * n];
    for row in 0..n {
        for col in 0..n {
            let (dx, dy) = (col as f64 + 0.5 - c, row as f64 + 0.5 - c);
            if dx * dx + dy * dy <= r2 {
                x[row * n + col] = 1.0;
            }
        }
    }
    x
}

/// Sparse `(num_angles * rays_per_angle) x n^2` line-integral matrix and the disk phantom.
/// Angles are `a π / num_angles`; offsets are cell midpoints spanning the
/// grid diagonal.
pub fn tomo_line_matrix(n: usize, num_angles: usize, rays_per_angle: usize) -> Result<(Matrix, Vec<f64>)> {
    if n < 4 {
        return Err(Error::usage(format!("grid size must be at least 4, got {n}")));
    }
    if num_angles == 0 || rays_per_angle == 0 {
        return Err(Error::usage("need at least one angle and one ray"));
    }
    let half = n as f64 * std::f64::consts::SQRT_2 / 2.0;
    let spacing = 2.0 * half / rays_per_angle as f64;
    let mut triplets = Vec::new();
    for a in 0..num_angles {
        let theta = a as f64 * PI / num_angles as f64;
        for j in 0..rays_per_angle {
            let offset = -half + (j as f64 + 0.5) * spacing;
            let row = a * rays_per_angle + j;
            triplets.extend(ray_intersections(n, theta, offset).into_iter().map(|(c, l)| (row, c, l)));
        }
    }
    let a = Matrix::from_triplets(num_angles * rays_per_angle, n * n, triplets)?;
    Ok((a, disk_phantom(n)))
}

/// `A x* + b^` with `b^` a unit vector in the null space of `A^T`.
pub fn tomo_noisy_rhs(a: &Matrix, x_star: &[f64]) -> Result<Vec<f64>> {
    let mut b = a.matvec(x_star, false)?;
    let h = null_direction(a)?;
    b.iter_mut().zip(&h).for_each(|(b, h)| *b += h);
    Ok(b)
}
