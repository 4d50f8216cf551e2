//! Line-oriented `key = value` scenario files.
//!
//! Blank lines are ignored and `#` starts a comment that runs to the end of
//! the line. Keys are dotted lowercase paths such as `model.tau_r`; each key
//! may appear once.

use std::collections::BTreeMap;

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// Raw key/value pairs of one scenario file, in key order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    pub source: String,
    pub entries: BTreeMap<String, Entry>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|seg| {
            !seg.is_empty() && seg.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
        })
}

impl Config {
    /// Parses `text`; `source` names the file in diagnostics.
    pub fn parse(source: &str, text: &str) -> Result<Config> {
        let err = |line: usize, message: String| CliError::Parse { path: source.to_string(), line, message };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !valid_key(key) {
                return Err(err(line, format!("malformed key `{key}` (use dotted lowercase names)")));
            }
            if value.is_empty() {
                return Err(err(line, format!("key `{key}` has no value")));
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(err(line, format!("duplicate key `{key}` (first set on line {})", prev.line)));
            }
            entries.insert(key.to_string(), Entry { value: value.to_string(), line });
        }
        Ok(Config { source: source.to_string(), entries })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    /// Sets or replaces a key, as if it had been written on line 0.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), Entry { value: value.into(), line: 0 });
    }
}

/// Parses a real number, also accepting multiples of π written `pi`, `2pi` or `2*pi`.
pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(prefix) = t.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = if prefix.is_empty() { 1.0 } else { prefix.parse::<f64>().ok()? };
        return Some(factor * std::f64::consts::PI).filter(|v| v.is_finite());
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_bool(text: &str) -> Option<bool> {
    match text.trim() {
        "true" | "yes" | "on" => Some(true),
        "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

/// Comma-separated list with surrounding whitespace removed; empty items are dropped.
pub fn parse_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}
