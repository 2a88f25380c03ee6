//! Flat `key = value` experiment configs.
//!
//! One assignment per line, `#` starts a comment, later assignments win.
//! `include <path>` splices another file in place, resolved relative to the
//! including file.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("include cycle through {0}")]
    Cycle(String),
    #[error("`{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
}

pub type ConfigResult<T> = Result<T, ConfigError>;

fn value_err<T>(key: &str, msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError::Value { key: key.into(), msg: msg.into() })
}

/// Raw assignments after include resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let mut raw = RawConfig::default();
        raw.load_into(path, &mut Vec::new())?;
        Ok(raw)
    }

    #[cfg(test)]
    pub fn parse_str(text: &str) -> ConfigResult<Self> {
        let mut raw = RawConfig::default();
        raw.parse_lines(text, "<inline>", Path::new("."), &mut Vec::new())?;
        Ok(raw)
    }

    fn load_into(&mut self, path: &Path, stack: &mut Vec<PathBuf>) -> ConfigResult<()> {
        let canonical = path
            .canonicalize()
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        if stack.contains(&canonical) {
            return Err(ConfigError::Cycle(path.display().to_string()));
        }
        let text = std::fs::read_to_string(&canonical)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        stack.push(canonical.clone());
        let dir = canonical.parent().unwrap_or(Path::new(".")).to_path_buf();
        self.parse_lines(&text, &path.display().to_string(), &dir, stack)?;
        stack.pop();
        Ok(())
    }

    fn parse_lines(
        &mut self,
        text: &str,
        name: &str,
        dir: &Path,
        stack: &mut Vec<PathBuf>,
    ) -> ConfigResult<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("include") {
                if rest.starts_with(char::is_whitespace) {
                    self.load_into(&dir.join(rest.trim()), stack)?;
                    continue;
                }
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: name.into(),
                    line: no + 1,
                    msg: format!("expected `key = value` or `include <path>`, got `{line}`"),
                });
            };
            let key = k.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    path: name.into(),
                    line: no + 1,
                    msg: format!("bad key `{key}`"),
                });
            }
            self.entries.insert(key.to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Typed view over a [`RawConfig`] that records every key it reads, together
/// with the value used (explicit or default), for the provenance header.
pub struct Reader<'a> {
    raw: &'a RawConfig,
    pub materialized: BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    pub fn new(raw: &'a RawConfig) -> Self {
        Reader { raw, materialized: BTreeMap::new() }
    }

    fn record(&mut self, key: &str, v: impl Display) {
        self.materialized.insert(key.to_string(), v.to_string());
    }

    pub fn parsed<T: FromStr>(&mut self, key: &str) -> ConfigResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.raw.get(key) {
            None => Ok(None),
            Some(s) => match s.parse::<T>() {
                Ok(v) => {
                    self.record(key, s);
                    Ok(Some(v))
                }
                Err(e) => value_err(key, format!("cannot parse `{s}`: {e}")),
            },
        }
    }

    pub fn or<T: FromStr + Display>(&mut self, key: &str, default: T) -> ConfigResult<T>
    where
        T::Err: Display,
    {
        let v = self.parsed(key)?.unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    pub fn string_or(&mut self, key: &str, default: &str) -> String {
        let v = self.raw.get(key).unwrap_or(default).to_string();
        self.record(key, &v);
        v
    }

    pub fn string(&mut self, key: &str) -> Option<String> {
        let v = self.raw.get(key)?.to_string();
        self.record(key, &v);
        Some(v)
    }

    /// Comma-separated reals.
    pub fn vector(&mut self, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        let Some(s) = self.raw.get(key) else { return Ok(None) };
        let v = parse_vector(s).or_else(|msg| value_err(key, msg))?;
        self.record(key, s);
        Ok(Some(v))
    }

    /// Records a derived default so it shows up in the provenance header.
    pub fn materialize(&mut self, key: &str, v: impl Display) {
        self.record(key, v);
    }

    /// Fails on keys that no command reads.
    pub fn reject_unknown(&self, known: &[&str]) -> ConfigResult<()> {
        for k in self.raw.keys() {
            if !known.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
        }
        Ok(())
    }
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect()
}

/// Grid sizes: `257,513,1025` (point counts) or `2^8..2^14` (cell counts
/// `2^8, 2^9, …, 2^14`, i.e. `2^k + 1` points).
pub fn parse_sizes(s: &str) -> Result<Vec<usize>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let exp = |p: &str| -> Result<u32, String> {
            p.trim()
                .strip_prefix("2^")
                .ok_or_else(|| format!("expected 2^k in `{p}`"))?
                .parse::<u32>()
                .map_err(|e| format!("`{p}`: {e}"))
        };
        let (lo, hi) = (exp(lo)?, exp(hi)?);
        if lo > hi || hi > 30 {
            return Err(format!("bad dyadic range 2^{lo}..2^{hi}"));
        }
        return Ok((lo..=hi).map(|k| (1usize << k) + 1).collect());
    }
    s.split(',')
        .map(|p| {
            let p = p.trim();
            match p.strip_prefix("2^") {
                Some(e) => e.parse::<u32>().map(|k| (1usize << k) + 1).map_err(|e| format!("`{p}`: {e}")),
                None => p.parse::<usize>().map_err(|e| format!("`{p}`: {e}")),
            }
        })
        .collect()
}

/// Seeds: `7`, `0,3,5` or `0..20` (half-open).
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
        let hi: u64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
        if lo >= hi {
            return Err(format!("empty seed range {lo}..{hi}"));
        }
        return Ok((lo..hi).collect());
    }
    s.split(',').map(|p| p.trim().parse::<u64>().map_err(|e| format!("`{p}`: {e}"))).collect()
}
