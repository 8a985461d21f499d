//! Flat key-value experiment configuration: `[section]` headers, one
//! `key = value` per line, `#` comments, arrays as comma lists. Keys are
//! addressed as `section.key`.

use crate::error::{CliError, Result};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(CliError::Config(format!(
                        "line {}: malformed section header `{raw}`",
                        lineno + 1
                    )));
                }
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let full = if section.is_empty() {
                key.trim().to_string()
            } else {
                format!("{section}.{}", key.trim())
            };
            values.insert(full, value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }

    /// f64 with `inf` accepted.
    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.str(key)?;
        parse_f64(raw).map_err(|_| CliError::Config(format!("key `{key}`: bad number `{raw}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(raw) => {
                parse_f64(raw).map_err(|_| CliError::Config(format!("key `{key}`: bad number `{raw}`")))
            }
            None => Ok(default),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let raw = self.str(key)?;
        raw.parse::<usize>()
            .map_err(|_| CliError::Config(format!("key `{key}`: bad integer `{raw}`")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some(raw) => raw
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("key `{key}`: bad integer `{raw}`"))),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            Some(raw) => raw
                .parse::<u64>()
                .map_err(|_| CliError::Config(format!("key `{key}`: bad integer `{raw}`"))),
            None => Ok(default),
        }
    }

    /// Comma-separated f64 list.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.str(key)?;
        raw.split(',')
            .map(|s| {
                parse_f64(s.trim())
                    .map_err(|_| CliError::Config(format!("key `{key}`: bad number `{s}`")))
            })
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

pub fn parse_f64(raw: &str) -> std::result::Result<f64, ()> {
    match raw {
        "inf" | "Inf" | "INF" => Ok(f64::INFINITY),
        other => other.parse::<f64>().map_err(|_| ()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_lists() {
        let cfg = Config::parse(
            "# experiment\n[grid]\nn = 2\nN = 128\nL = 16\n\n[space]\nq = inf\nlambdas = 0.5, 2\n",
        )
        .unwrap();
        assert_eq!(cfg.usize("grid.n").unwrap(), 2);
        assert_eq!(cfg.f64("space.q").unwrap(), f64::INFINITY);
        assert_eq!(cfg.f64_list("space.lambdas").unwrap(), vec![0.5, 2.0]);
    }

    #[test]
    fn reports_key_path_on_missing_or_bad_values() {
        let cfg = Config::parse("[grid]\nn = two\n").unwrap();
        let err = cfg.usize("grid.n").unwrap_err().to_string();
        assert!(err.contains("grid.n"), "{err}");
        let err = cfg.f64("grid.L").unwrap_err().to_string();
        assert!(err.contains("grid.L"), "{err}");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::parse("[grid\nn = 2\n").is_err());
        assert!(Config::parse("just some text\n").is_err());
    }
}
