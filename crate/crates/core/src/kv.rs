//! Flat `key = value` text files.
//!
//! Used for model/sampler configuration and for ground-truth dumps. Blank
//! lines and lines starting with `#` are ignored; keys must be unique.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type KeyValues = BTreeMap<String, String>;

pub fn parse(text: &str) -> Result<KeyValues> {
    let mut out = KeyValues::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if out.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<KeyValues> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}

pub fn render<'a, I>(entries: I) -> String
where
    I: IntoIterator<Item = (&'a str, String)>,
{
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

pub fn parse_f64(kv: &KeyValues, key: &str) -> Result<Option<f64>> {
    kv.get(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number")))
        })
        .transpose()
}

pub fn parse_u64(kv: &KeyValues, key: &str) -> Result<Option<u64>> {
    kv.get(key)
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not an unsigned integer")))
        })
        .transpose()
}

/// Rejects any key not in `allowed`.
pub fn reject_unknown(kv: &KeyValues, allowed: &[&str]) -> Result<()> {
    match kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::Config(format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}
