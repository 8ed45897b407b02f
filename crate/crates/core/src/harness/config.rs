//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses `key = value` lines. `#` starts a comment; dashes in keys become
/// underscores so `tau-rows` and `tau_rows` are the same key.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::parse(i + 1, format!("expected `key = value`, found `{line}`")));
        };
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(Error::parse(i + 1, "empty key"));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::parse(i + 1, format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
