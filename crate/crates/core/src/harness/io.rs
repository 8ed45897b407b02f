//! Vector CSV, instance directories and PGM images.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{market, Matrix};
use crate::problems::{Descriptor, ProblemInstance};

pub fn vector_csv(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        let _ = writeln!(out, "{x:e}");
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t.parse().map_err(|_| Error::parse(i + 1, format!("`{t}` is not a number")))?;
        if !v.is_finite() {
            return Err(Error::parse(i + 1, "non-finite value"));
        }
        out.push(v);
    }
    Ok(out)
}

pub fn write_vector(v: &[f64], path: &Path) -> Result<()> {
    fs::write(path, vector_csv(v)).map_err(|e| Error::io(path, e))
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// `instance.json` contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub descriptor: Descriptor,
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub b_n_norm: f64,
}

/// Writes `A.mtx`, `b.csv`, `xstar.csv` (when known) and `instance.json` into `dir`.
pub fn save_instance(inst: &ProblemInstance, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    market::write(&inst.a, &dir.join("A.mtx"))?;
    write_vector(&inst.b, &dir.join("b.csv"))?;
    if let Some(x) = &inst.x_star {
        write_vector(x, &dir.join("xstar.csv"))?;
    }
    let info = InstanceInfo {
        descriptor: inst.descriptor.clone(),
        rows: inst.a.rows(),
        cols: inst.a.cols(),
        nnz: inst.a.nnz(),
        b_n_norm: inst.b_n_norm,
    };
    let path = dir.join("instance.json");
    let json = serde_json::to_string_pretty(&info).expect("descriptor serializes") + "\n";
    fs::write(&path, json).map_err(|e| Error::io(&path, e))
}

pub fn load_instance(dir: &Path) -> Result<(Matrix, Vec<f64>, Option<Vec<f64>>)> {
    let a = market::read(&dir.join("A.mtx"))?;
    let b = read_vector(&dir.join("b.csv"))?;
    let xs = dir.join("xstar.csv");
    let x = if xs.exists() { Some(read_vector(&xs)?) } else { None };
    Ok((a, b, x))
}

/// Plain (ASCII) PGM of a row-major `n x n` image, values clamped to `[0, 1]`.
pub fn write_pgm(image: &[f64], n: usize, path: &Path) -> Result<()> {
    if image.len() != n * n {
        return Err(Error::usage("image size does not match the grid"));
    }
    let mut out = format!("P2\n{n} {n}\n255\n");
    for row in image.chunks(n) {
        let line: Vec<String> = row.iter().map(|v| ((v.clamp(0.0, 1.0) * 255.0).round() as u32).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_round_trip() {
        let v = vec![0.1, -2.5e-300, 1.0 / 3.0, 0.0];
        assert_eq!(parse_vector(&vector_csv(&v)).unwrap(), v);
    }

    #[test]
    fn vector_parse_errors() {
        assert!(matches!(parse_vector("1\n2\nabc\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_vector("inf\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn pgm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.pgm");
        write_pgm(&[0.0, 1.0, 0.5, 2.0], 2, &p).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "P2\n2 2\n255\n0 255\n128 255\n");
    }
}
