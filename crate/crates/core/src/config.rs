//! Flat `key=value` settings with layered overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are normalised
//! so that `n-init` and `n_init` name the same setting. Later layers replace
//! earlier ones key by key.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: Vec<(String, String)>,
    used: RefCell<BTreeSet<String>>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("config line {}: expected key=value", lineno + 1)))?;
            s.set(k, v.trim());
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Inserts or replaces `key`.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let key = normalize(key);
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn set_opt<T: Display>(&mut self, key: &str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v.to_string());
        }
    }

    /// Applies every entry of `other` on top of `self`.
    pub fn overlay(&mut self, other: &Settings) {
        for (k, v) in &other.entries {
            self.set(k, v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        let key = normalize(key);
        let found = self.entries.iter().find(|(k, _)| *k == key).map(|(_, v)| v.as_str());
        if found.is_some() {
            self.used.borrow_mut().insert(key);
        }
        found
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::InvalidSpec(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::InvalidSpec(format!("`{key}`: cannot parse list item `{s}`")))
                    })
                    .collect()
            })
            .transpose()
    }

    /// Entries never read through [`Settings::get`].
    pub fn unused(&self) -> Vec<(String, String)> {
        let used = self.used.borrow();
        self.entries.iter().filter(|(k, _)| !used.contains(k)).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut base = Settings::parse("# sweep\nhidden = 50,100\nn-init=250\n\nseed=3\n").unwrap();
        let mut flags = Settings::new();
        flags.set("seed", "9");
        base.overlay(&flags);
        assert_eq!(base.list::<usize>("hidden").unwrap(), Some(vec![50, 100]));
        assert_eq!(base.parsed::<usize>("n_init").unwrap(), Some(250));
        assert_eq!(base.parsed::<u64>("seed").unwrap(), Some(9));
        assert_eq!(base.parsed::<u64>("missing").unwrap(), None);
    }

    #[test]
    fn unused_keys_are_reported() {
        let s = Settings::parse("a=1\nb=2").unwrap();
        s.get("a");
        assert_eq!(s.unused(), vec![("b".to_string(), "2".to_string())]);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(Settings::parse("novalue").is_err());
        let s = Settings::parse("n=abc").unwrap();
        assert!(s.parsed::<usize>("n").is_err());
    }
}
