//! Flat `key = value` text configuration.
//!
//! One entry per line; blank lines and lines starting with `#` are ignored.
//! Keys may repeat (e.g. one `cluster` or `spec` line per item).

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlatConfig {
    pub entries: Vec<Entry>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`", i + 1))
            })?;
            entries.push(Entry {
                key: key.trim().to_ascii_lowercase(),
                value: value.trim().to_string(),
                line: i + 1,
            });
        }
        Ok(FlatConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }

    fn find<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a Entry> + 'a {
        let key = key.to_string();
        self.entries.iter().filter(move |e| e.key == key)
    }

    /// The single value for `key`; repeating it is an error.
    pub fn get(&self, key: &str) -> Result<Option<&Entry>> {
        let mut it = self.find(key);
        let first = it.next();
        if let Some(dup) = it.next() {
            return Err(Error::InvalidConfig(format!(
                "line {}: `{key}` given more than once",
                dup.line
            )));
        }
        Ok(first)
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key)? {
            None => Ok(None),
            Some(entry) => entry.value.parse().map(Some).map_err(|_| {
                Error::InvalidConfig(format!(
                    "line {}: cannot parse `{}` for `{key}`",
                    entry.line, entry.value
                ))
            }),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse_value(key)?
            .ok_or_else(|| Error::InvalidConfig(format!("missing `{key}`")))
    }

    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self
            .entries
            .iter()
            .find(|e| !allowed.contains(&e.key.as_str()))
        {
            Some(e) => Err(Error::InvalidConfig(format!(
                "line {}: unknown key `{}`",
                e.line, e.key
            ))),
            None => Ok(()),
        }
    }
}

/// Comma-separated list of numbers.
pub fn parse_numbers(entry: &Entry, expected: usize) -> Result<Vec<f64>> {
    let values = entry
        .value
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| {
            Error::InvalidConfig(format!(
                "line {}: expected numbers in `{}`",
                entry.line, entry.value
            ))
        })?;
    if values.len() != expected {
        return Err(Error::InvalidConfig(format!(
            "line {}: `{}` takes {expected} values, got {}",
            entry.line,
            entry.key,
            values.len()
        )));
    }
    Ok(values)
}
