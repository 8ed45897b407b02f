//! Outer loop: setup, stopping rules, trace rows, drift control.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::steps::{ermr_step, gek_step, reabk_step, rek_step, rmr_homogeneous_step, rmr_step, IndexRule};
use super::{BlockCache, ExecMode, Method, SolverConfig, SolverState, StepSize, SystemView};
use crate::error::{Error, Result};
use crate::harness::trace::{RunMeta, RunTrace, TraceRow};
use crate::matrix::{dist, norm, Axis, Matrix};
use crate::partition::{Partition, RngStream};
use crate::theory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `rse_tol` reached.
    ToleranceMet,
    /// `residual_tol` reached.
    ResidualMet,
    /// Iteration budget exhausted without meeting a tolerance.
    MaxIters,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stop: StopReason,
    pub iterations: u64,
}

/// Partitions, Gram cache and step size for one system, shared by all trials.
#[derive(Debug)]
pub struct PreparedSolver<'a> {
    config: SolverConfig,
    a: &'a Matrix,
    b: &'a [f64],
    rows: Partition,
    cols: Partition,
    cache: BlockCache,
    alpha: Option<f64>,
    /// `‖A^T b‖`, the normal residual at `x = 0`.
    residual_scale: f64,
}

impl<'a> PreparedSolver<'a> {
    pub fn new(config: SolverConfig, a: &'a Matrix, b: &'a [f64]) -> Result<Self> {
        config.validate()?;
        if b.len() != a.rows() {
            return Err(Error::usage(format!(
                "right-hand side has length {} but the matrix has {} rows",
                b.len(),
                a.rows()
            )));
        }
        let samples = !matches!(config.method, Method::Gek | Method::CyclicExtended);
        if samples && a.frobenius_norm_sq() == 0.0 {
            return Err(Error::data("matrix is zero; block sampling is undefined"));
        }

        let (tr, tc) = match config.method {
            Method::Rek | Method::CyclicExtended | Method::Gek => (1, 1),
            _ => (config.tau_rows, config.tau_cols),
        };
        let rows = Partition::contiguous(a.rows(), tr)?.attach_norms(a, Axis::Rows)?;
        let cols = Partition::contiguous(a.cols(), tc)?.attach_norms(a, Axis::Cols)?;

        let block_method =
            matches!(config.method, Method::Rmr | Method::RmrHomogeneous | Method::Ermr | Method::Reabk);
        let cache = if block_method { BlockCache::for_mode(a, config.exec_mode) } else { BlockCache::matvec() };

        let alpha = match (config.method, config.reabk_alpha) {
            (Method::Reabk, StepSize::Fixed(v)) => Some(v),
            (Method::Reabk, StepSize::Auto) => {
                let beta = theory::beta_max(a, &rows, Axis::Rows)?.max(theory::beta_max(a, &cols, Axis::Cols)?);
                Some(1.75 / beta)
            }
            _ => None,
        };

        let residual_scale = norm(&a.matvec(b, true)?);
        Ok(PreparedSolver { config, a, b, rows, cols, cache, alpha, residual_scale })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn view(&self) -> SystemView<'_> {
        SystemView { a: self.a, b: self.b, rows: &self.rows, cols: &self.cols, cache: &self.cache }
    }

    pub fn exec_mode(&self) -> ExecMode {
        self.cache.mode()
    }

    /// Step size REABK will use (after resolving `auto`).
    pub fn reabk_alpha(&self) -> Option<f64> {
        self.alpha
    }

    fn initial_state(&self, trial: u64) -> Result<SolverState> {
        let (m, n) = (self.a.rows(), self.a.cols());
        let x0 = self.config.x0.clone().unwrap_or_else(|| vec![0.0; n]);
        let pinned = matches!(self.config.method, Method::Rmr) || self.config.consistent_mode;
        let y0 = if pinned {
            vec![0.0; m]
        } else {
            self.config.y0.clone().unwrap_or_else(|| self.b.to_vec())
        };
        if self.config.x0.is_some() || (!pinned && self.config.y0.is_some()) {
            self.warn_subspace(&x0, &y0);
        }
        SolverState::new(&self.view(), x0, y0, RngStream::substream(self.config.seed, trial))
    }

    fn warn_subspace(&self, x0: &[f64], y0: &[f64]) {
        if self.a.rows() * self.a.cols() > 1_000_000 {
            return;
        }
        let Ok(svd) = self.a.thin_svd(None) else { return };
        let px = svd.project_row_space(x0);
        if dist(&px, x0) > 1e-8 * (1.0 + norm(x0)) {
            log::warn!("x0 is not in the row space of A; the limit is not the minimum-norm solution");
        }
        let d: Vec<f64> = y0.iter().zip(self.b).map(|(y, b)| y - b).collect();
        let pd = svd.project_range(&d);
        if dist(&pd, &d) > 1e-8 * (1.0 + norm(&d)) {
            log::warn!("y0 - b is not in the range of A");
        }
    }

    fn step(&self, state: &mut SolverState, view: &SystemView<'_>) {
        match self.config.method {
            Method::Rmr => rmr_step(state, view),
            Method::Ermr if self.config.consistent_mode => rmr_step(state, view),
            Method::Ermr => ermr_step(state, view),
            Method::RmrHomogeneous => rmr_homogeneous_step(state, view),
            Method::Reabk => reabk_step(state, view, self.alpha.expect("resolved in new")),
            Method::Rek => rek_step(state, view, IndexRule::Weighted),
            Method::CyclicExtended => rek_step(state, view, IndexRule::Cyclic),
            Method::Gek => gek_step(state, view),
        };
    }

    /// Normal-equation residual `‖A^T (b - A x)‖`, or `‖A^T y‖` for the homogeneous method.
    fn residual(&self, state: &SolverState) -> f64 {
        if self.config.method.solves_homogeneous() {
            return norm(&self.a.matvec(&state.y, true).expect("shape"));
        }
        let ax = self.a.matvec(&state.x, false).expect("shape");
        let r: Vec<f64> = self.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        norm(&self.a.matvec(&r, true).expect("shape"))
    }

    /// Runs trial `trial` (the RNG substream id). `oracle` is the target of
    /// the output iterate: `x*` for the `x` methods, `b_N` for the
    /// homogeneous one.
    pub fn run_trial(&self, trial: u64, oracle: Option<&[f64]>) -> Result<RunOutcome> {
        let cfg = &self.config;
        let homogeneous = cfg.method.solves_homogeneous();
        let out_len = if homogeneous { self.a.rows() } else { self.a.cols() };
        if let Some(o) = oracle {
            if o.len() != out_len {
                return Err(Error::usage(format!("oracle has length {}, expected {out_len}", o.len())));
            }
        } else if cfg.rse_tol.is_some() {
            return Err(Error::usage("rse_tol needs an oracle solution"));
        }
        let target_norm = oracle.map(norm).unwrap_or(0.0);
        let rse_absolute = oracle.is_some() && target_norm == 0.0;
        let rse = |s: &SolverState| -> Option<f64> {
            let it = if homogeneous { &s.y } else { &s.x };
            oracle.map(|o| if rse_absolute { dist(it, o) } else { dist(it, o) / target_norm })
        };

        let view = self.view();
        let mut state = self.initial_state(trial)?;
        let tracks_aux =
            matches!(cfg.method, Method::Rmr | Method::RmrHomogeneous | Method::Ermr | Method::Reabk);
        let mut max_drift = 0.0f64;
        let mut rows = Vec::new();
        let mut stop = StopReason::MaxIters;

        let met = |r: Option<f64>| matches!((r, cfg.rse_tol), (Some(r), Some(t)) if r <= t);
        let start = Instant::now();
        if met(rse(&state)) {
            stop = StopReason::ToleranceMet;
        } else {
            while state.k < cfg.max_iters {
                self.step(&mut state, &view);
                let k = state.k;
                if tracks_aux && k % cfg.recompute_every == 0 {
                    let (dh, dt) = state.recursion_drift(&view);
                    max_drift = max_drift.max(dh).max(dt);
                    state.recompute(&view);
                }
                let current = rse(&state);
                let tol_met = met(current);
                if tol_met || k % cfg.trace_stride == 0 || k == cfg.max_iters {
                    let residual = self.residual(&state);
                    rows.push(TraceRow {
                        k,
                        elapsed_ns: start.elapsed().as_nanos() as u64,
                        rse: current,
                        residual,
                        skips: state.skips,
                    });
                    if tol_met {
                        stop = StopReason::ToleranceMet;
                        break;
                    }
                    if let Some(t) = cfg.residual_tol {
                        if residual <= t * self.residual_scale {
                            stop = StopReason::ResidualMet;
                            break;
                        }
                    }
                }
            }
        }
        if !tracks_aux {
            state.recompute(&view);
        }

        let meta = RunMeta {
            method: cfg.method,
            config: cfg.clone(),
            trial,
            exec_mode: self.exec_mode(),
            reabk_alpha: self.alpha,
            stop,
            iterations: state.k,
            skips: state.skips,
            max_recursion_drift: max_drift,
            rse_absolute,
            final_rse: rse(&state),
            instance: None,
            rates: None,
        };
        Ok(RunOutcome {
            trace: RunTrace { meta, rows },
            iterations: state.k,
            x: state.x,
            y: state.y,
            stop,
        })
    }
}

/// Prepares the system and runs trial `config.trial` once.
pub fn run(config: &SolverConfig, a: &Matrix, b: &[f64], oracle: Option<&[f64]>) -> Result<RunOutcome> {
    PreparedSolver::new(config.clone(), a, b)?.run_trial(config.trial, oracle)
}
