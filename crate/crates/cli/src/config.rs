//! `key=value` run configuration: command defaults, then a config file, then
//! `--set` overrides. The manifest written next to the outputs uses the same
//! format, so any run can be repeated with `--config <manifest>`.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use crate::UsageError;

/// Manifest keys with this prefix describe a run but are not inputs.
pub const INFO_PREFIX: &str = "info.";

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Split `key=value`, trimming both sides.
pub fn split_pair(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    let k = k.trim();
    (!k.is_empty()).then_some((k, v.trim()))
}

/// Parse a config file body. Blank lines and `#` comments are skipped, as are
/// informational manifest keys.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) =
            split_pair(line).ok_or_else(|| usage(format!("line {}: expected key=value, got `{line}`", k + 1)))?;
        if key.starts_with(INFO_PREFIX) {
            continue;
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_pairs(&text).with_context(|| format!("in {}", path.display()))
}

impl RunConfig {
    pub fn new(defaults: &[(&str, &str)]) -> Self {
        RunConfig {
            values: defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }

    /// Replace known keys; unknown keys are usage errors.
    pub fn apply<I, K, V>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in pairs {
            let (k, v) = (k.as_ref(), v.as_ref());
            match self.values.get_mut(k) {
                Some(slot) => *slot = v.to_string(),
                None => {
                    let known: Vec<&str> = self.values.keys().map(String::as_str).collect();
                    return Err(usage(format!("unknown key `{k}` (known: {})", known.join(", "))));
                }
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key `{key}` has no default"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse::<T>()
            .map_err(|_| usage(format!("`{key}` must be {what}, got `{raw}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key, "a number")?;
        if !v.is_finite() {
            return Err(usage(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    /// `auto` maps to `None`.
    pub fn f64_or_auto(&self, key: &str) -> Result<Option<f64>> {
        if self.raw(key) == "auto" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        self.parse(key, "a nonnegative integer")
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        self.parse(key, "true or false")
    }

    /// One of `choices`.
    pub fn choice(&self, key: &str, choices: &[&str]) -> Result<String> {
        let raw = self.raw(key);
        if choices.contains(&raw) {
            Ok(raw.to_string())
        } else {
            Err(usage(format!("`{key}` must be one of {}, got `{raw}`", choices.join("|"))))
        }
    }

    /// Comma-separated numbers; an item `lo:hi:count` expands to `count`
    /// equally spaced values from `lo` to `hi`.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key);
        let bad = || usage(format!("`{key}`: cannot parse `{raw}` as a number list"));
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [v] => out.push(v.parse::<f64>().map_err(|_| bad())?),
                [lo, hi, n] => {
                    let lo: f64 = lo.parse().map_err(|_| bad())?;
                    let hi: f64 = hi.parse().map_err(|_| bad())?;
                    let n: usize = n.parse().map_err(|_| bad())?;
                    out.extend(dhomog_core::flowrule::linspace(lo, hi, n));
                }
                _ => return Err(bad()),
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(out)
    }

    /// Comma-separated integers; an item `lo:hi` is the inclusive range.
    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.raw(key);
        let bad = || usage(format!("`{key}`: cannot parse `{raw}` as an integer list"));
        let mut out = Vec::new();
        for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.split_once(':') {
                None => out.push(item.parse::<usize>().map_err(|_| bad())?),
                Some((lo, hi)) => {
                    let lo: usize = lo.parse().map_err(|_| bad())?;
                    let hi: usize = hi.parse().map_err(|_| bad())?;
                    out.extend(lo..=hi);
                }
            }
        }
        Ok(out)
    }

    /// All effective parameters followed by `info.*` lines.
    pub fn write_manifest(&self, path: &Path, command: &str, info: &[(String, String)]) -> Result<()> {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        writeln!(w, "# dhomog {command}")?;
        for (k, v) in &self.values {
            writeln!(w, "{k}={v}")?;
        }
        writeln!(w, "{INFO_PREFIX}command={command}")?;
        writeln!(w, "{INFO_PREFIX}version={}", env!("CARGO_PKG_VERSION"))?;
        for (k, v) in info {
            writeln!(w, "{INFO_PREFIX}{k}={v}")?;
        }
        w.flush()?;
        Ok(())
    }
}
