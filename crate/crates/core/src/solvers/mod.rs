//! Row-action iterations for `A x = b` and `A^T y = 0`.
//!
//! The block methods keep two auxiliary residuals alongside the iterates:
//! `r_hat = -A^T y` and `r_tilde = b - y - A x`. In cached mode they are
//! advanced with the Gram matrices `A^T A` and `A A^T`; in matvec mode with
//! products against `A` itself.

mod driver;
mod steps;

pub use driver::{run, PreparedSolver, RunOutcome, StopReason};
pub use steps::{
    adaptive_step_sizes, ermr_step, gek_step, reabk_step, rek_step, rmr_homogeneous_step, rmr_step,
    IndexRule, StepInfo,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dist, norm, Matrix};
use crate::partition::{Partition, RngStream};

/// Absolute floor for step denominators.
pub const GUARD_ABS: f64 = 1e-30;

/// Systems with at most this many rows default to cached execution.
pub const CACHED_MAX_ROWS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Randomized multiple row method for `A x = b`.
    Rmr,
    /// Randomized multiple row method for `A^T y = 0`.
    RmrHomogeneous,
    /// Extended randomized multiple row method.
    Ermr,
    /// Extended row method with cyclic single row/column sweeps.
    CyclicExtended,
    /// Randomized extended Kaczmarz (single rows/columns, norm-weighted).
    Rek,
    /// Gaussian extended Kaczmarz.
    Gek,
    /// Randomized extended average block Kaczmarz.
    Reabk,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Rmr,
        Method::RmrHomogeneous,
        Method::Ermr,
        Method::CyclicExtended,
        Method::Rek,
        Method::Gek,
        Method::Reabk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rmr => "rmr",
            Method::RmrHomogeneous => "rmr_homogeneous",
            Method::Ermr => "ermr",
            Method::CyclicExtended => "cyclic_extended",
            Method::Rek => "rek",
            Method::Gek => "gek",
            Method::Reabk => "reabk",
        }
    }

    /// Whether the method's output iterate is `y` rather than `x`.
    pub fn solves_homogeneous(self) -> bool {
        self == Method::RmrHomogeneous
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::usage(format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    /// Materialize `A^T A` and `A A^T` and use the Gram recursions.
    Cached,
    /// Never form Gram matrices; use products with `A`.
    Matvec,
    /// Cached when `m <= CACHED_MAX_ROWS`, else matvec.
    Auto,
}

impl ExecMode {
    pub fn resolve(self, rows: usize) -> ExecMode {
        match self {
            ExecMode::Auto if rows <= CACHED_MAX_ROWS => ExecMode::Cached,
            ExecMode::Auto => ExecMode::Matvec,
            m => m,
        }
    }
}

impl FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cached" => Ok(ExecMode::Cached),
            "matvec" => Ok(ExecMode::Matvec),
            "auto" => Ok(ExecMode::Auto),
            _ => Err(Error::usage(format!("unknown exec mode `{s}`"))),
        }
    }
}

/// REABK step size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepSize {
    /// `1.75 / max(beta_max_rows, beta_max_cols)`.
    Auto,
    Fixed(f64),
}

impl FromStr for StepSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(StepSize::Auto);
        }
        match s.parse::<f64>() {
            Ok(a) if a > 0.0 && a.is_finite() => Ok(StepSize::Fixed(a)),
            _ => Err(Error::usage(format!("step size must be `auto` or a positive number, got `{s}`"))),
        }
    }
}

/// Everything `run` needs besides the system itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub tau_rows: usize,
    pub tau_cols: usize,
    pub max_iters: u64,
    /// Stop once `‖x - x*‖ / ‖x*‖` drops to this value (needs an oracle).
    pub rse_tol: Option<f64>,
    /// Stop once the normal residual falls below this fraction of its
    /// value at `x = 0`; checked at trace rows only.
    pub residual_tol: Option<f64>,
    pub seed: u64,
    /// Substream id; independent trials of one experiment differ only here.
    pub trial: u64,
    pub exec_mode: ExecMode,
    pub reabk_alpha: StepSize,
    /// Pin `y = 0` in extended methods (the system is known consistent).
    pub consistent_mode: bool,
    pub trace_stride: u64,
    /// Exact recomputation period for the auxiliary residuals.
    pub recompute_every: u64,
    #[serde(skip)]
    pub x0: Option<Vec<f64>>,
    #[serde(skip)]
    pub y0: Option<Vec<f64>>,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            tau_rows: 1,
            tau_cols: 1,
            max_iters: 100_000,
            rse_tol: None,
            residual_tol: None,
            seed: 0,
            trial: 0,
            exec_mode: ExecMode::Auto,
            reabk_alpha: StepSize::Auto,
            consistent_mode: false,
            trace_stride: 100,
            recompute_every: 10_000,
            x0: None,
            y0: None,
        }
    }

    pub fn with_tau(mut self, rows: usize, cols: usize) -> Self {
        self.tau_rows = rows;
        self.tau_cols = cols;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trace_stride == 0 {
            return Err(Error::usage("trace stride must be positive"));
        }
        if self.recompute_every == 0 {
            return Err(Error::usage("recompute period must be positive"));
        }
        for (name, tol) in [("rse_tol", self.rse_tol), ("residual_tol", self.residual_tol)] {
            if let Some(t) = tol {
                if !(t >= 0.0 && t.is_finite()) {
                    return Err(Error::usage(format!("{name} must be a finite nonnegative number")));
                }
            }
        }
        if let StepSize::Fixed(a) = self.reabk_alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::usage("REABK step size must be positive"));
            }
        }
        Ok(())
    }
}

/// Optional Gram matrices backing the cached recursions.
#[derive(Clone, Debug)]
pub struct BlockCache {
    /// `A^T A`, `n x n`.
    gram_cols: Option<Matrix>,
    /// `A A^T`, `m x m`.
    gram_rows: Option<Matrix>,
}

impl BlockCache {
    pub fn cached(a: &Matrix) -> Self {
        BlockCache { gram_cols: Some(a.gram_cols()), gram_rows: Some(a.gram_rows()) }
    }

    pub fn matvec() -> Self {
        BlockCache { gram_cols: None, gram_rows: None }
    }

    pub fn for_mode(a: &Matrix, mode: ExecMode) -> Self {
        match mode.resolve(a.rows()) {
            ExecMode::Cached => Self::cached(a),
            _ => Self::matvec(),
        }
    }

    pub fn mode(&self) -> ExecMode {
        if self.gram_rows.is_some() {
            ExecMode::Cached
        } else {
            ExecMode::Matvec
        }
    }

    pub fn gram_cols(&self) -> Option<&Matrix> {
        self.gram_cols.as_ref()
    }

    pub fn gram_rows(&self) -> Option<&Matrix> {
        self.gram_rows.as_ref()
    }
}

/// Read-only view of one system shared by every step.
#[derive(Clone, Copy, Debug)]
pub struct SystemView<'a> {
    pub a: &'a Matrix,
    pub b: &'a [f64],
    pub rows: &'a Partition,
    pub cols: &'a Partition,
    pub cache: &'a BlockCache,
}

impl<'a> SystemView<'a> {
    pub fn new(
        a: &'a Matrix,
        b: &'a [f64],
        rows: &'a Partition,
        cols: &'a Partition,
        cache: &'a BlockCache,
    ) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::usage(format!(
                "right-hand side has length {} but the matrix has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if rows.universe() != a.rows() || cols.universe() != a.cols() {
            return Err(Error::usage("partitions do not match the matrix shape"));
        }
        if rows.norms_sq().is_none() || cols.norms_sq().is_none() {
            return Err(Error::usage("partitions need attached norms"));
        }
        Ok(SystemView { a, b, rows, cols, cache })
    }
}

/// Iterates, auxiliary residuals and the random stream of one run.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `-A^T y`
    pub r_hat: Vec<f64>,
    /// `b - y - A x`
    pub r_tilde: Vec<f64>,
    pub k: u64,
    pub skips: u64,
    pub rng: RngStream,
    pub(crate) row_cursor: usize,
    pub(crate) col_cursor: usize,
    pub(crate) scratch_m: Vec<f64>,
    pub(crate) scratch_n: Vec<f64>,
    pub(crate) scratch_block: Vec<f64>,
}

impl SolverState {
    /// Starts from `x0`, `y0` and computes both auxiliary residuals exactly.
    pub fn new(view: &SystemView<'_>, x0: Vec<f64>, y0: Vec<f64>, rng: RngStream) -> Result<Self> {
        let (m, n) = (view.a.rows(), view.a.cols());
        if x0.len() != n || y0.len() != m {
            return Err(Error::usage("initial vectors do not match the matrix shape"));
        }
        let mut s = SolverState {
            x: x0,
            y: y0,
            r_hat: vec![0.0; n],
            r_tilde: vec![0.0; m],
            k: 0,
            skips: 0,
            rng,
            row_cursor: 0,
            col_cursor: 0,
            scratch_m: vec![0.0; m],
            scratch_n: vec![0.0; n],
            scratch_block: Vec::new(),
        };
        s.recompute(view);
        Ok(s)
    }

    /// `x0 = 0`, `y0 = b`.
    pub fn standard(view: &SystemView<'_>, rng: RngStream) -> Self {
        Self::new(view, vec![0.0; view.a.cols()], view.b.to_vec(), rng).expect("shapes come from the view")
    }

    /// Normalized discrepancies of the recursions against exact evaluation:
    /// `‖r_hat + A^T y‖ / (1 + ‖A^T y‖)` and `‖r_tilde - (b - y - A x)‖ / (1 + ‖b‖)`.
    pub fn recursion_drift(&self, view: &SystemView<'_>) -> (f64, f64) {
        let aty = view.a.matvec(&self.y, true).expect("shape");
        let neg: Vec<f64> = aty.iter().map(|v| -v).collect();
        let d_hat = dist(&self.r_hat, &neg) / (1.0 + norm(&aty));
        let exact = self.exact_r_tilde(view);
        let d_tilde = dist(&self.r_tilde, &exact) / (1.0 + norm(view.b));
        (d_hat, d_tilde)
    }

    /// Resets both auxiliary residuals to their exact values.
    pub fn recompute(&mut self, view: &SystemView<'_>) {
        view.a.mul_t_into(&self.y, &mut self.r_hat);
        self.r_hat.iter_mut().for_each(|v| *v = -*v);
        self.r_tilde = self.exact_r_tilde(view);
    }

    fn exact_r_tilde(&self, view: &SystemView<'_>) -> Vec<f64> {
        let ax = view.a.matvec(&self.x, false).expect("shape");
        view.b.iter().zip(&self.y).zip(&ax).map(|((b, y), ax)| b - y - ax).collect()
    }
}
