//! Per-iteration order statistics over independent trials.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solvers::Method;

use super::trace::RunTrace;

pub const ENSEMBLE_HEADER: &str = "method,k,rse_median,rse_min,rse_max";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleRow {
    pub k: u64,
    pub rse_median: f64,
    pub rse_min: f64,
    pub rse_max: f64,
}

#[derive(Clone, Debug)]
pub struct TrialEnsemble {
    pub traces: Vec<RunTrace>,
    pub rows: Vec<EnsembleRow>,
}

impl TrialEnsemble {
    pub fn final_row(&self) -> Option<&EnsembleRow> {
        self.rows.last()
    }

    /// Row with the smallest median (earliest on ties).
    pub fn min_median_row(&self) -> Option<&EnsembleRow> {
        self.rows.iter().fold(None, |best: Option<&EnsembleRow>, r| match best {
            Some(b) if b.rse_median <= r.rse_median => Some(b),
            _ => Some(r),
        })
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Aligns traces by `k`. A trace that stopped early contributes its last
/// value at every later `k`; before its first row it contributes nothing.
pub fn aggregate(traces: Vec<RunTrace>) -> Result<TrialEnsemble> {
    let Some(first) = traces.first() else {
        return Err(Error::usage("aggregation needs at least one trace"));
    };
    let stride = first.meta.config.trace_stride;
    if traces.iter().any(|t| t.meta.config.trace_stride != stride) {
        return Err(Error::usage("traces were recorded with different strides"));
    }
    if traces.iter().flat_map(|t| &t.rows).any(|r| r.rse.is_none()) {
        return Err(Error::usage("aggregation needs traces with an RSE column"));
    }
    let ks: BTreeSet<u64> = traces.iter().flat_map(|t| t.rows.iter().map(|r| r.k)).collect();
    let mut cursors = vec![0usize; traces.len()];
    let mut rows = Vec::with_capacity(ks.len());
    let mut vals = Vec::with_capacity(traces.len());
    for k in ks {
        vals.clear();
        for (t, c) in traces.iter().zip(cursors.iter_mut()) {
            while *c < t.rows.len() && t.rows[*c].k <= k {
                *c += 1;
            }
            if *c > 0 {
                vals.push(t.rows[*c - 1].rse.expect("checked above"));
            }
        }
        vals.sort_by(f64::total_cmp);
        rows.push(EnsembleRow { k, rse_median: median(&vals), rse_min: vals[0], rse_max: vals[vals.len() - 1] });
    }
    Ok(TrialEnsemble { traces, rows })
}

pub fn ensemble_csv(sets: &[(Method, &TrialEnsemble)]) -> String {
    let mut out = String::from(ENSEMBLE_HEADER);
    out.push('\n');
    for (m, e) in sets {
        for r in &e.rows {
            let _ = writeln!(out, "{},{},{:e},{:e},{:e}", m, r.k, r.rse_median, r.rse_min, r.rse_max);
        }
    }
    out
}

pub fn write_ensemble(sets: &[(Method, &TrialEnsemble)], path: &Path) -> Result<()> {
    fs::write(path, ensemble_csv(sets)).map_err(|e| Error::io(path, e))
}
