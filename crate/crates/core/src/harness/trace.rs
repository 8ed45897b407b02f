//! Per-run traces: CSV rows plus a JSON sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::Descriptor;
use crate::solvers::{ExecMode, Method, SolverConfig, StopReason};
use crate::theory::RateReport;

pub const TRACE_HEADER: &str = "k,elapsed_ns,rse,residual,skips";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub k: u64,
    pub elapsed_ns: u64,
    pub rse: Option<f64>,
    pub residual: f64,
    pub skips: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub method: Method,
    pub config: SolverConfig,
    pub trial: u64,
    pub exec_mode: ExecMode,
    pub reabk_alpha: Option<f64>,
    pub stop: StopReason,
    pub iterations: u64,
    pub skips: u64,
    pub max_recursion_drift: f64,
    /// The RSE column holds absolute errors (the target was zero).
    pub rse_absolute: bool,
    pub final_rse: Option<f64>,
    pub instance: Option<Descriptor>,
    pub rates: Option<RateReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub meta: RunMeta,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn final_rse(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.rse)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// CSV text for `rows`; with `with_time == false` the timing column is left empty.
pub fn trace_csv(rows: &[TraceRow], with_time: bool) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let rse = r.rse.map(|v| format!("{v:e}")).unwrap_or_default();
        let t = if with_time { r.elapsed_ns.to_string() } else { String::new() };
        let _ = writeln!(out, "{},{},{},{:e},{}", r.k, t, rse, r.residual, r.skips);
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{TRACE_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(Error::parse(line_no, format!("expected 5 fields, found {}", f.len())));
        }
        let bad = |name: &str| Error::parse(line_no, format!("bad {name} value"));
        rows.push(TraceRow {
            k: f[0].parse().map_err(|_| bad("k"))?,
            elapsed_ns: if f[1].is_empty() { 0 } else { f[1].parse().map_err(|_| bad("elapsed_ns"))? },
            rse: if f[2].is_empty() { None } else { Some(f[2].parse().map_err(|_| bad("rse"))?) },
            residual: f[3].parse().map_err(|_| bad("residual"))?,
            skips: f[4].parse().map_err(|_| bad("skips"))?,
        });
    }
    Ok(rows)
}

pub fn write_trace(trace: &RunTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_csv(&trace.rows, true)).map_err(|e| Error::io(path, e))?;
    let meta = sidecar_path(path);
    let json = serde_json::to_string_pretty(&trace.meta).expect("metadata serializes");
    fs::write(&meta, json + "\n").map_err(|e| Error::io(&meta, e))
}

pub fn read_trace(path: &Path) -> Result<RunTrace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_trace_csv(&text)?;
    let meta_path = sidecar_path(path);
    let json = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta = serde_json::from_str(&json).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    Ok(RunTrace { meta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> RunMeta {
        RunMeta {
            method: Method::Ermr,
            config: SolverConfig::new(Method::Ermr),
            trial: 3,
            exec_mode: ExecMode::Cached,
            reabk_alpha: None,
            stop: StopReason::MaxIters,
            iterations: 0,
            skips: 0,
            max_recursion_drift: 0.0,
            rse_absolute: false,
            final_rse: None,
            instance: None,
            rates: None,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(trace_csv(&[], true), format!("{TRACE_HEADER}\n"));
    }

    #[test]
    fn absent_rse_is_empty_field() {
        let row = TraceRow { k: 100, elapsed_ns: 5, rse: None, residual: 0.5, skips: 0 };
        let text = trace_csv(&[row], true);
        assert_eq!(text.lines().nth(1).unwrap(), "100,5,,5e-1,0");
        assert_eq!(parse_trace_csv(&text).unwrap(), vec![row]);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            TraceRow { k: 100, elapsed_ns: 10, rse: Some(0.1 + 0.2), residual: 1.0 / 3.0, skips: 1 },
            TraceRow { k: 137, elapsed_ns: 11, rse: Some(5e-324), residual: 1e300, skips: 2 },
        ];
        let trace = RunTrace { meta: meta(), rows };
        write_trace(&trace, &path).unwrap();
        assert!(dir.path().join("t.csv.meta.json").exists());
        assert_eq!(read_trace(&path).unwrap(), trace);
    }

    #[test]
    fn bad_csv_reports_line() {
        let text = format!("{TRACE_HEADER}\n1,2,0.5,1,0\n2,x,0.5,1,0\n");
        assert!(matches!(parse_trace_csv(&text), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_trace_csv("k,rse\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(read_trace(Path::new("/nonexistent/t.csv")), Err(Error::Io { .. })));
    }
}
