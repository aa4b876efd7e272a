//! Flat `key=value` run configuration with per-solver defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: expected key=value, got {text:?}")]
    Syntax { path: PathBuf, line: usize, text: String },
    #[error("unknown key {key:?} for {solver}")]
    UnknownKey { solver: String, key: String },
    #[error("invalid value for {key}: {value:?} ({reason})")]
    Invalid { key: String, value: String, reason: String },
}

/// One recognised parameter: name, default and a help line.
#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
    /// Given on the command line without a value (`--key` means `key=true`).
    pub switch: bool,
}

pub const fn param(key: &'static str, default: &'static str, help: &'static str) -> Param {
    Param { key, default, help, switch: false }
}

pub const fn switch(key: &'static str, help: &'static str) -> Param {
    Param { key, default: "false", help, switch: true }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: String,
    pub values: BTreeMap<String, String>,
    pub out: PathBuf,
}

/// Reads `key=value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str, path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax { path: path.to_path_buf(), line: i + 1, text: raw.to_string() });
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Defaults, then the config file, then command-line overrides.
    pub fn build(
        solver: &str,
        params: &[Param],
        file: Option<&Path>,
        overrides: &[(String, String)],
        out: PathBuf,
    ) -> Result<Self, ConfigError> {
        let mut values: BTreeMap<String, String> = params.iter().map(|p| (p.key.to_string(), p.default.to_string())).collect();
        let mut set = |k: String, v: String| {
            if !values.contains_key(&k) {
                return Err(ConfigError::UnknownKey { solver: solver.to_string(), key: k });
            }
            values.insert(k, v);
            Ok(())
        };
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
            for (k, v) in parse_config_text(&text, path)? {
                set(k, v)?;
            }
        }
        for (k, v) in overrides {
            set(k.clone(), v.clone())?;
        }
        Ok(Self { solver: solver.to_string(), values, out })
    }

    pub fn with_defaults(solver: &str, params: &[Param], out: PathBuf) -> Self {
        Self::build(solver, params, None, &[], out).expect("defaults are valid keys")
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e: T::Err| ConfigError::Invalid { key: key.to_string(), value: v.to_string(), reason: e.to_string() })
    }

    /// `"lo,hi"` or `auto`.
    pub fn window(&self, key: &str) -> Result<Option<(f64, f64)>, ConfigError> {
        let v = self.raw(key);
        if v == "auto" {
            return Ok(None);
        }
        let bad = |reason: &str| ConfigError::Invalid { key: key.to_string(), value: v.to_string(), reason: reason.to_string() };
        let (a, b) = v.split_once(',').ok_or_else(|| bad("expected lo,hi or auto"))?;
        let a: f64 = a.trim().parse().map_err(|_| bad("lower end is not a number"))?;
        let b: f64 = b.trim().parse().map_err(|_| bad("upper end is not a number"))?;
        if !(a < b) {
            return Err(bad("need lo < hi"));
        }
        Ok(Some((a, b)))
    }

    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { key: key.to_string(), value: self.raw(key).to_string(), reason: reason.into() }
    }

    /// The effective configuration in the file format, sorted by key.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARAMS: [Param; 2] = [param("gamma", "1", ""), param("rtol", "1e-12", "")];

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("collapse-lab-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "# comment\ngamma = 1.2\nrtol=1e-10\n").unwrap();
        let c = RunConfig::build("lp", &PARAMS, Some(&path), &[("gamma".into(), "1.1".into())], dir.clone()).unwrap();
        assert_eq!(c.raw("gamma"), "1.1");
        assert_eq!(c.raw("rtol"), "1e-10");
        assert_eq!(c.render(), "gamma=1.1\nrtol=1e-10\n");
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_rejected() {
        let e = RunConfig::build("lp", &PARAMS, None, &[("eps".into(), "0.1".into())], PathBuf::new()).unwrap_err();
        assert!(matches!(e, ConfigError::UnknownKey { .. }));
        assert!(parse_config_text("gamma 1.2", Path::new("x")).is_err());
        let c = RunConfig::with_defaults("lp", &PARAMS, PathBuf::new());
        assert!(c.get::<f64>("gamma").is_ok());
        assert!(c.window("gamma").is_err());
    }
}
