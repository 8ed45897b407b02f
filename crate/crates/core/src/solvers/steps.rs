//! Single iterations of every method.
//!
//! The block methods (`rmr`, `rmr_homogeneous`, `ermr`, `reabk`) advance the
//! auxiliary residuals together with the iterates. The single row/column and
//! Gaussian methods evaluate their coefficients directly from `x` and `y`
//! and leave `r_hat`/`r_tilde` stale; call [`SolverState::recompute`] before
//! reading them.

use super::{SolverState, SystemView, GUARD_ABS};
use crate::matrix::{dot, norm_sq, Matrix};

/// What a step did.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub row_block: Option<usize>,
    pub col_block: Option<usize>,
    pub x_skipped: bool,
    pub y_skipped: bool,
    /// Equivalent averaged-block step size of the `y` half.
    pub alpha_hat: Option<f64>,
    /// Equivalent averaged-block step size of the `x` half.
    pub alpha_tilde: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexRule {
    /// Sweep rows and columns in natural order, advancing both every step.
    Cyclic,
    /// Draw rows and columns with probability proportional to their squared norm.
    Weighted,
}

#[derive(Clone, Copy)]
enum Coef {
    /// Exact projection coefficient `g1/g2` (resp. `g4/g5`).
    Projection,
    /// Averaged-block coefficient `alpha / ‖A_block‖²_F`.
    Averaged(f64),
}

/// Denominator guard: too small in absolute terms, or so small relative to
/// the numerator that the equivalent averaged step would exceed `1/eps`.
fn guarded(num: f64, den: f64, block_norm_sq: f64) -> bool {
    den <= GUARD_ABS || den <= f64::EPSILON * num * block_norm_sq
}

/// `sum_{a,b} v_a G[idx_a, idx_b] v_b`
fn block_quadratic(g: &Matrix, idx: &[usize], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&jb, &vb) in idx.iter().zip(v) {
        let mut inner = 0.0;
        for (&ja, &va) in idx.iter().zip(v) {
            inner += va * g.dense_at(ja, jb);
        }
        s += inner * vb;
    }
    s
}

/// Column-block projection of `y` toward `N(A^T)` with `zeta = r_hat[J]`.
/// Returns `(skipped, alpha_hat)`.
fn y_half(state: &mut SolverState, view: &SystemView<'_>, j: usize, coef: Coef) -> (bool, Option<f64>) {
    let cols = view.cols.block(j);
    let block_norm = view.cols.norms_sq().expect("checked by SystemView")[j];

    let mut zeta = std::mem::take(&mut state.scratch_block);
    zeta.clear();
    zeta.extend(cols.iter().map(|&c| state.r_hat[c]));
    let g1 = norm_sq(&zeta);
    if g1 == 0.0 {
        state.scratch_block = zeta;
        return (true, None);
    }

    // v = A[:, J] zeta
    let mut v = std::mem::take(&mut state.scratch_m);
    v.iter_mut().for_each(|x| *x = 0.0);
    view.a.col_block_axpy(cols, &zeta, 1.0, &mut v);

    let g2 = match view.cache.gram_cols() {
        Some(g) => block_quadratic(g, cols, &zeta),
        None => norm_sq(&v),
    };

    let (c, alpha_hat) = match coef {
        Coef::Projection => {
            if guarded(g1, g2, block_norm) {
                state.scratch_block = zeta;
                state.scratch_m = v;
                return (true, None);
            }
            (g1 / g2, Some(g1 * block_norm / g2))
        }
        Coef::Averaged(alpha) => (alpha / block_norm, None),
    };

    for ((yi, rt), vi) in state.y.iter_mut().zip(state.r_tilde.iter_mut()).zip(&v) {
        *yi += c * vi;
        // r_tilde = b - y - A x follows the change in y
        *rt -= c * vi;
    }
    match view.cache.gram_cols() {
        Some(g) => g.col_block_axpy(cols, &zeta, -c, &mut state.r_hat),
        None => {
            let mut atv = std::mem::take(&mut state.scratch_n);
            view.a.mul_t_into(&v, &mut atv);
            for (r, w) in state.r_hat.iter_mut().zip(&atv) {
                *r -= c * w;
            }
            state.scratch_n = atv;
        }
    }

    state.scratch_block = zeta;
    state.scratch_m = v;
    (false, alpha_hat)
}

/// Row-block projection of `x` with `eta = r_tilde[I]`.
/// Returns `(skipped, alpha_tilde)`.
fn x_half(state: &mut SolverState, view: &SystemView<'_>, i: usize, coef: Coef) -> (bool, Option<f64>) {
    let rows = view.rows.block(i);
    let block_norm = view.rows.norms_sq().expect("checked by SystemView")[i];

    let mut eta = std::mem::take(&mut state.scratch_block);
    eta.clear();
    eta.extend(rows.iter().map(|&r| state.r_tilde[r]));
    let g4 = norm_sq(&eta);
    if g4 == 0.0 {
        state.scratch_block = eta;
        return (true, None);
    }

    // w = A[I, :]^T eta
    let mut w = std::mem::take(&mut state.scratch_n);
    w.iter_mut().for_each(|x| *x = 0.0);
    view.a.row_block_t_axpy(rows, &eta, 1.0, &mut w);

    let g5 = match view.cache.gram_rows() {
        Some(g) => block_quadratic(g, rows, &eta),
        None => norm_sq(&w),
    };

    let (c, alpha_tilde) = match coef {
        Coef::Projection => {
            if guarded(g4, g5, block_norm) {
                state.scratch_block = eta;
                state.scratch_n = w;
                return (true, None);
            }
            (g4 / g5, Some(g4 * block_norm / g5))
        }
        Coef::Averaged(alpha) => (alpha / block_norm, None),
    };

    for (xi, wi) in state.x.iter_mut().zip(&w) {
        *xi += c * wi;
    }
    match view.cache.gram_rows() {
        Some(g) => g.col_block_axpy(rows, &eta, -c, &mut state.r_tilde),
        None => {
            let mut aw = std::mem::take(&mut state.scratch_m);
            view.a.mul_into(&w, &mut aw);
            for (r, v) in state.r_tilde.iter_mut().zip(&aw) {
                *r -= c * v;
            }
            state.scratch_m = aw;
        }
    }

    state.scratch_block = eta;
    state.scratch_n = w;
    (false, alpha_tilde)
}

fn draw(p: &crate::partition::Partition, state: &mut SolverState) -> usize {
    p.sample_block(&mut state.rng).expect("nonzero matrix required to sample")
}

fn finish(state: &mut SolverState, info: StepInfo) -> StepInfo {
    state.k += 1;
    state.skips += info.x_skipped as u64 + info.y_skipped as u64;
    info
}

/// One randomized multiple row step on `A x = b - y` (with `y = 0` this is
/// the plain consistent-system iteration).
pub fn rmr_step(state: &mut SolverState, view: &SystemView<'_>) -> StepInfo {
    let i = draw(view.rows, state);
    let (x_skipped, alpha_tilde) = x_half(state, view, i, Coef::Projection);
    finish(state, StepInfo { row_block: Some(i), x_skipped, alpha_tilde, ..Default::default() })
}

/// One randomized multiple row step on `A^T y = 0`.
pub fn rmr_homogeneous_step(state: &mut SolverState, view: &SystemView<'_>) -> StepInfo {
    let j = draw(view.cols, state);
    let (y_skipped, alpha_hat) = y_half(state, view, j, Coef::Projection);
    finish(state, StepInfo { col_block: Some(j), y_skipped, alpha_hat, ..Default::default() })
}

/// One extended step: a column-block step on `y`, then a row-block step on
/// `x` against the updated `b - y`.
pub fn ermr_step(state: &mut SolverState, view: &SystemView<'_>) -> StepInfo {
    let j = draw(view.cols, state);
    let (y_skipped, alpha_hat) = y_half(state, view, j, Coef::Projection);
    let i = draw(view.rows, state);
    let (x_skipped, alpha_tilde) = x_half(state, view, i, Coef::Projection);
    finish(
        state,
        StepInfo { row_block: Some(i), col_block: Some(j), x_skipped, y_skipped, alpha_hat, alpha_tilde },
    )
}

/// One averaged-block extended step with constant step size `alpha`. The
/// `x` half uses `y` from before this step.
pub fn reabk_step(state: &mut SolverState, view: &SystemView<'_>, alpha: f64) -> StepInfo {
    let j = draw(view.cols, state);
    let i = draw(view.rows, state);
    let (x_skipped, _) = x_half(state, view, i, Coef::Averaged(alpha));
    let (y_skipped, _) = y_half(state, view, j, Coef::Averaged(alpha));
    finish(state, StepInfo { row_block: Some(i), col_block: Some(j), x_skipped, y_skipped, ..Default::default() })
}

/// One single row/column extended step. The column update on `y` runs
/// first and the row update on `x` sees the new `y`.
///
/// With [`IndexRule::Weighted`] the partitions in `view` must have
/// single-index blocks. Zero rows or columns are skipped.
pub fn rek_step(state: &mut SolverState, view: &SystemView<'_>, rule: IndexRule) -> StepInfo {
    let (m, n) = (view.a.rows(), view.a.cols());
    let (i, j) = match rule {
        IndexRule::Cyclic => {
            let ij = (state.row_cursor, state.col_cursor);
            state.row_cursor = (state.row_cursor + 1) % m;
            state.col_cursor = (state.col_cursor + 1) % n;
            ij
        }
        IndexRule::Weighted => {
            let jb = draw(view.cols, state);
            let ib = draw(view.rows, state);
            debug_assert!(view.rows.block(ib).len() == 1 && view.cols.block(jb).len() == 1);
            (view.rows.block(ib)[0], view.cols.block(jb)[0])
        }
    };

    let mut info = StepInfo { row_block: Some(i), col_block: Some(j), ..Default::default() };

    let mut col = [0.0];
    view.a.col_block_t_mul(&[j], &state.y, &mut col);
    let col_norm = view.a.col_norm_sq(j);
    if col_norm == 0.0 {
        info.y_skipped = true;
    } else {
        view.a.col_block_axpy(&[j], &[1.0], -col[0] / col_norm, &mut state.y);
    }

    let mut ax = [0.0];
    view.a.row_block_mul(&[i], &state.x, &mut ax);
    let row_norm = view.a.row_norm_sq(i);
    if row_norm == 0.0 {
        info.x_skipped = true;
    } else {
        let r = view.b[i] - state.y[i] - ax[0];
        view.a.row_block_t_axpy(&[i], &[1.0], r / row_norm, &mut state.x);
    }
    finish(state, info)
}

/// One Gaussian extended step: Gaussian sketches `zeta` (length n) then
/// `eta` (length m), drawn in that order.
pub fn gek_step(state: &mut SolverState, view: &SystemView<'_>) -> StepInfo {
    let a = view.a;
    let mut info = StepInfo::default();

    let zeta = state.rng.gaussian_vec(a.cols());
    let mut v = std::mem::take(&mut state.scratch_m);
    a.mul_into(&zeta, &mut v);
    let den = norm_sq(&v);
    if den <= GUARD_ABS {
        info.y_skipped = true;
    } else {
        let c = dot(&v, &state.y) / den;
        for (yi, vi) in state.y.iter_mut().zip(&v) {
            *yi -= c * vi;
        }
    }
    state.scratch_m = v;

    let eta = state.rng.gaussian_vec(a.rows());
    let mut w = std::mem::take(&mut state.scratch_n);
    a.mul_t_into(&eta, &mut w);
    let den = norm_sq(&w);
    if den <= GUARD_ABS {
        info.x_skipped = true;
    } else {
        // eta^T (b - y - A x) = eta^T (b - y) - (A^T eta)^T x
        let num = eta.iter().zip(view.b).zip(&state.y).fold(0.0, |s, ((e, b), y)| s + e * (b - y))
            - dot(&w, &state.x);
        let c = num / den;
        for (xi, wi) in state.x.iter_mut().zip(&w) {
            *xi += c * wi;
        }
    }
    state.scratch_n = w;
    finish(state, info)
}

/// Averaged-block step sizes equivalent to the exact block projections:
/// `alpha_hat = ‖zeta‖² ‖A[:,J]‖²_F / ‖A[:,J] zeta‖²` and
/// `alpha_tilde = ‖eta‖² ‖A[I,:]‖²_F / ‖A[I,:]^T eta‖²`.
///
/// Computed with products against `A` only. Either entry is `None` when its
/// denominator vanishes.
pub fn adaptive_step_sizes(
    a: &Matrix,
    col_block: &[usize],
    zeta: &[f64],
    row_block: &[usize],
    eta: &[f64],
) -> (Option<f64>, Option<f64>) {
    let mut v = vec![0.0; a.rows()];
    a.col_block_axpy(col_block, zeta, 1.0, &mut v);
    let den_hat = norm_sq(&v);
    let col_norm = a.block_norm_sq(crate::matrix::Axis::Cols, col_block);
    let alpha_hat = (den_hat > GUARD_ABS).then(|| norm_sq(zeta) * col_norm / den_hat);

    let mut w = vec![0.0; a.cols()];
    a.row_block_t_axpy(row_block, eta, 1.0, &mut w);
    let den_tilde = norm_sq(&w);
    let row_norm = a.block_norm_sq(crate::matrix::Axis::Rows, row_block);
    let alpha_tilde = (den_tilde > GUARD_ABS).then(|| norm_sq(eta) * row_norm / den_tilde);

    (alpha_hat, alpha_tilde)
}
