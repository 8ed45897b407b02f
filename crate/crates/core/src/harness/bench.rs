//! Multi-trial runs, parallel over trials.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::solvers::{Method, PreparedSolver, SolverConfig};
use crate::theory;

use super::aggregate::{aggregate, TrialEnsemble};

pub const THREADS_ENV: &str = "ROWSOLVE_THREADS";

/// Worker cap from `ROWSOLVE_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `trials` trials (substreams `0..trials`) of each method and
/// aggregates them. `x_star` is the oracle for the `x` methods; the
/// homogeneous method is scored against `b_N`.
pub fn run_bench(
    a: &Matrix,
    b: &[f64],
    x_star: &[f64],
    base: &SolverConfig,
    methods: &[Method],
    trials: u64,
) -> Result<Vec<(Method, TrialEnsemble)>> {
    if trials == 0 {
        return Err(Error::usage("need at least one trial"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;

    let mut b_n = None;
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let oracle: &[f64] = if method.solves_homogeneous() {
            if b_n.is_none() {
                b_n = Some(theory::range_null_split(a, b)?.1);
            }
            b_n.as_deref().expect("just set")
        } else {
            x_star
        };
        let mut config = base.clone();
        config.method = method;
        let prepared = PreparedSolver::new(config, a, b)?;
        let traces = pool.install(|| {
            (0..trials)
                .into_par_iter()
                .map(|t| prepared.run_trial(t, Some(oracle)).map(|o| o.trace))
                .collect::<Result<Vec<_>>>()
        })?;
        out.push((method, aggregate(traces)?));
    }
    Ok(out)
}
