//! Matrix Market exchange format (`real general`, coordinate or array).
//!
//! Indices on disk are 1-based; in memory they are 0-based. Coordinate files
//! load as CSR, array files as dense. Values are written with `{:e}`, which
//! prints the shortest string that parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Matrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

pub fn read(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

pub fn write(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_string(m)).map_err(|e| Error::io(path, e))
}

/// Serializes dense matrices in array format and CSR matrices in coordinate format.
pub fn to_string(m: &Matrix) -> String {
    let mut s = String::new();
    if m.is_dense() {
        s.push_str("%%MatrixMarket matrix array real general\n");
        let _ = writeln!(s, "{} {}", m.rows(), m.cols());
        for v in m.to_col_major() {
            let _ = writeln!(s, "{v:e}");
        }
    } else {
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", m.rows(), m.cols(), m.nnz());
        for (i, j, v) in m.triplets() {
            let _ = writeln!(s, "{} {} {v:e}", i + 1, j + 1);
        }
    }
    s
}

pub fn parse(text: &str) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    let format = parse_header(hline, header)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (sline, size) = body.next().ok_or_else(|| Error::parse(hline + 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| Error::parse(sline, format!("bad size token `{t}`"))))
        .collect::<Result<_>>()?;

    match format {
        Format::Coordinate => {
            let &[m, n, nnz] = dims.as_slice() else {
                return Err(Error::parse(sline, "coordinate size line needs `rows cols nnz`"));
            };
            if m == 0 || n == 0 {
                return Err(Error::parse(sline, "dimensions must be positive"));
            }
            let mut seen = std::collections::HashSet::with_capacity(nnz);
            let mut triplets = Vec::with_capacity(nnz);
            for (ln, line) in body.by_ref() {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(Error::parse(ln, "expected `row col value`"));
                }
                let i = parse_index(ln, toks[0], m)?;
                let j = parse_index(ln, toks[1], n)?;
                let v = parse_value(ln, toks[2])?;
                if !seen.insert((i, j)) {
                    return Err(Error::parse(ln, format!("duplicate entry ({}, {})", i + 1, j + 1)));
                }
                triplets.push((i, j, v));
                if triplets.len() > nnz {
                    return Err(Error::parse(ln, format!("more than the declared {nnz} entries")));
                }
            }
            if triplets.len() != nnz {
                return Err(Error::parse(
                    text.lines().count(),
                    format!("declared {nnz} entries, found {}", triplets.len()),
                ));
            }
            Matrix::from_triplets(m, n, triplets).map_err(|e| Error::parse(sline, e.to_string()))
        }
        Format::Array => {
            let &[m, n] = dims.as_slice() else {
                return Err(Error::parse(sline, "array size line needs `rows cols`"));
            };
            if m == 0 || n == 0 {
                return Err(Error::parse(sline, "dimensions must be positive"));
            }
            let mut data = Vec::with_capacity(m * n);
            for (ln, line) in body {
                for tok in line.split_whitespace() {
                    if data.len() == m * n {
                        return Err(Error::parse(ln, "more values than rows * cols"));
                    }
                    data.push(parse_value(ln, tok)?);
                }
            }
            if data.len() != m * n {
                return Err(Error::parse(
                    text.lines().count(),
                    format!("expected {} values, found {}", m * n, data.len()),
                ));
            }
            Matrix::from_col_major(m, n, data)
        }
    }
}

fn parse_header(line_no: usize, header: &str) -> Result<Format> {
    let toks: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(Error::parse(line_no, "header must be `%%MatrixMarket matrix <format> real general`"));
    }
    let format = match toks[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        f => return Err(Error::parse(line_no, format!("unsupported format `{f}`"))),
    };
    if toks[3] != "real" && toks[3] != "integer" {
        return Err(Error::parse(line_no, format!("unsupported field `{}`", toks[3])));
    }
    if toks[4] != "general" {
        return Err(Error::parse(line_no, format!("unsupported symmetry `{}`", toks[4])));
    }
    Ok(format)
}

fn parse_index(line: usize, tok: &str, bound: usize) -> Result<usize> {
    let k: usize = tok.parse().map_err(|_| Error::parse(line, format!("bad index `{tok}`")))?;
    if k == 0 || k > bound {
        return Err(Error::parse(line, format!("index {k} out of bounds 1..={bound}")));
    }
    Ok(k - 1)
}

fn parse_value(line: usize, tok: &str) -> Result<f64> {
    tok.parse().map_err(|_| Error::parse(line, format!("bad value `{tok}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trip() {
        let i2 = Matrix::identity(2).unwrap();
        assert_eq!(parse(&to_string(&i2)).unwrap(), i2);
        let csr = i2.to_csr();
        assert_eq!(parse(&to_string(&csr)).unwrap(), csr);
    }

    #[test]
    fn single_coordinate_entry() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n% comment\n3 2 1\n3 2 5\n").unwrap();
        assert!(!m.is_dense());
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(2, 1), 5.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn duplicate_entries_rejected() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn malformed_inputs_report_line() {
        let err = parse("%%MatrixMarket matrix coordinate complex general\n1 1 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse("not a header\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn awkward_values_survive() {
        let a = Matrix::from_rows(&[vec![0.1, 1e-300], vec![-3.25e17, f64::MIN_POSITIVE]]).unwrap();
        assert_eq!(parse(&to_string(&a)).unwrap(), a);
    }
}
