//! Flat key-value configuration files with section headers.
//!
//! ```text
//! # comment
//! [model]
//! n = 3
//! delta_a = 1.4142135624
//! [grid]
//! g_kappa = log:0.001:0.3:41
//! ```
//!
//! Parsing is strict: unknown sections or keys are rejected so that typos
//! cannot silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug)]
pub enum ConfigError {
    Syntax { line: usize, message: String },
    UnknownKey { section: String, key: String },
    BadValue { section: String, key: String, message: String },
    Io(std::io::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { line, message } => {
                write!(f, "config syntax error on line {}: {}", line, message)
            }
            ConfigError::UnknownKey { section, key } => {
                write!(f, "unknown config key [{}] {}", section, key)
            }
            ConfigError::BadValue { section, key, message } => {
                write!(f, "bad value for [{}] {}: {}", section, key, message)
            }
            ConfigError::Io(e) => write!(f, "config io error: {}", e),
        }
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = Result<T, ConfigError>;

/// Parsed configuration: `(section, key) -> value`, order-independent.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<(String, String), String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> ConfigResult<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(stripped) = line.strip_prefix('[') {
                let name = stripped.strip_suffix(']').ok_or(ConfigError::Syntax {
                    line: lineno + 1,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(ConfigError::Syntax {
                        line: lineno + 1,
                        message: "empty section name".into(),
                    });
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: lineno + 1,
                message: "expected `key = value`".into(),
            })?;
            let key = key.trim().to_string();
            if key.is_empty() || section.is_empty() {
                return Err(ConfigError::Syntax {
                    line: lineno + 1,
                    message: "keys must live inside a [section]".into(),
                });
            }
            let prev = entries.insert((section.clone(), key.clone()), value.trim().to_string());
            if prev.is_some() {
                return Err(ConfigError::Syntax {
                    line: lineno + 1,
                    message: format!("duplicate key [{}] {}", section, key),
                });
            }
        }
        Ok(ConfigMap { entries })
    }

    pub fn load(path: &std::path::Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        Self::parse(&text)
    }

    /// Reject any key outside the allowed `(section, key)` schema.
    pub fn ensure_known(&self, allowed: &[(&str, &str)]) -> ConfigResult<()> {
        for (section, key) in self.entries.keys() {
            if !allowed.iter().any(|(s, k)| s == section && k == key) {
                return Err(ConfigError::UnknownKey { section: section.clone(), key: key.clone() });
            }
        }
        Ok(())
    }

    pub fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|s| s.as_str())
    }

    fn bad(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { section: section.into(), key: key.into(), message: message.into() }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> ConfigResult<Option<f64>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|e| self.bad(section, key, format!("{} ({})", e, s))),
        }
    }

    pub fn get_usize(&self, section: &str, key: &str) -> ConfigResult<Option<usize>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => s
                .parse::<usize>()
                .map(Some)
                .map_err(|e| self.bad(section, key, format!("{} ({})", e, s))),
        }
    }

    pub fn get_bool(&self, section: &str, key: &str) -> ConfigResult<Option<bool>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some("true") | Some("yes") | Some("on") => Ok(Some(true)),
            Some("false") | Some("no") | Some("off") => Ok(Some(false)),
            Some(other) => Err(self.bad(section, key, format!("expected a boolean, got {}", other))),
        }
    }

    pub fn get_str(&self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|s| s.to_string())
    }

    pub fn get_list_f64(&self, section: &str, key: &str) -> ConfigResult<Option<Vec<f64>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|e| self.bad(section, key, e.to_string())),
        }
    }

    pub fn get_list_usize(&self, section: &str, key: &str) -> ConfigResult<Option<Vec<usize>>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|v| v.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|e| self.bad(section, key, e.to_string())),
        }
    }

    pub fn get_grid(&self, section: &str, key: &str) -> ConfigResult<Option<Grid>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(s) => Grid::parse(s).map(Some).map_err(|m| self.bad(section, key, m)),
        }
    }
}

/// Deterministic one-dimensional parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Linear { start: f64, end: f64, count: usize },
    Log { start: f64, end: f64, count: usize },
    List(Vec<f64>),
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["linear", a, b, n] => Ok(Grid::Linear {
                start: a.parse().map_err(|e| format!("{}", e))?,
                end: b.parse().map_err(|e| format!("{}", e))?,
                count: n.parse().map_err(|e| format!("{}", e))?,
            }),
            ["log", a, b, n] => {
                let start: f64 = a.parse().map_err(|e| format!("{}", e))?;
                let end: f64 = b.parse().map_err(|e| format!("{}", e))?;
                if start <= 0.0 || end <= 0.0 {
                    return Err("log grids need positive endpoints".into());
                }
                Ok(Grid::Log { start, end, count: n.parse().map_err(|e| format!("{}", e))? })
            }
            ["list", values] => {
                let v = values
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| format!("{}", e))?;
                if v.is_empty() {
                    return Err("empty list grid".into());
                }
                Ok(Grid::List(v))
            }
            [single] => {
                let v: f64 = single.parse().map_err(|e| format!("{}", e))?;
                Ok(Grid::List(vec![v]))
            }
            _ => Err(format!("unrecognized grid spec `{}`", s)),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Linear { start, end, count } => {
                if *count <= 1 {
                    return vec![*start];
                }
                (0..*count)
                    .map(|k| start + (end - start) * k as f64 / (*count as f64 - 1.0))
                    .collect()
            }
            Grid::Log { start, end, count } => {
                if *count <= 1 {
                    return vec![*start];
                }
                let (ls, le) = (start.ln(), end.ln());
                (0..*count)
                    .map(|k| (ls + (le - ls) * k as f64 / (*count as f64 - 1.0)).exp())
                    .collect()
            }
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            Grid::Linear { start, end, count } => format!("linear:{}:{}:{}", start, end, count),
            Grid::Log { start, end, count } => format!("log:{}:{}:{}", start, end, count),
            Grid::List(v) => format!(
                "list:{}",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
        }
    }
}
