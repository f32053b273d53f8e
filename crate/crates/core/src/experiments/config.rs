use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const GIB: f64 = (1u64 << 30) as f64;

/// Flat `key = value` experiment configuration.
///
/// Lines starting with `#` and blank lines are ignored; a trailing `# ...`
/// after a value is stripped. Lists are comma separated.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub memory_cap_bytes: u64,
    pub tag: Option<String>,
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            seed: 0,
            memory_cap_bytes: (8.0 * GIB) as u64,
            tag: None,
            values: BTreeMap::new(),
        }
    }

    /// Parses config text; `experiment` may be omitted when the caller names it.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::new("");
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`, got `{raw}`", no + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Sets one key; the reserved keys update the typed fields.
    pub fn set(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        match key {
            "experiment" => self.experiment = value.to_string(),
            "seed" => self.seed = parse_one(key, value)?,
            "tag" => self.tag = Some(value.to_string()),
            "memory_cap_gib" => {
                let gib: f64 = parse_one(key, value)?;
                if !(gib > 0.0) {
                    return Err(Error::Config("memory_cap_gib must be positive".into()));
                }
                self.memory_cap_bytes = (gib * GIB) as u64;
            }
            _ => {
                self.values.insert(key.to_string(), value.to_string());
            }
        }
        Ok(self)
    }

    /// Builder form of [`set`](Self::set) for values that are known to be valid.
    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, &value.to_string()).expect("valid config value");
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some(v) => parse_one(key, v),
            None => Ok(default),
        }
    }

    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>> {
        let Some(v) = self.raw(key) else {
            return Ok(default.to_vec());
        };
        let items: Vec<T> = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_one(key, s))
            .collect::<Result<_>>()?;
        if items.is_empty() {
            return Err(Error::Config(format!("`{key}` is an empty list")));
        }
        Ok(items)
    }

    /// Optional value with no default.
    pub fn maybe<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|v| parse_one(key, v)).transpose()
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    let v = value.trim();
    // fractions such as `1/16` are accepted wherever a number is
    if let Some((a, b)) = v.split_once('/') {
        if let (Ok(a), Ok(b)) = (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            if let Ok(t) = (a / b).to_string().parse() {
                return Ok(t);
            }
        }
    }
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse `{key} = {value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nexperiment = decoupling\nseed = 9\n\ndelta = 1/2, 1/4 # dyadic\np=4\nmemory_cap_gib = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, "decoupling");
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.memory_cap_bytes, 1 << 29);
        assert_eq!(cfg.list::<f64>("delta", &[]).unwrap(), vec![0.5, 0.25]);
        assert_eq!(cfg.get("p", 2.0).unwrap(), 4.0);
        assert_eq!(cfg.get("trials", 32usize).unwrap(), 32);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(ExperimentConfig::parse("delta 0.5"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::parse("= 3"), Err(Error::Config(_))));
        let cfg = ExperimentConfig::parse("trials = many").unwrap();
        assert!(cfg.get("trials", 1usize).is_err());
        assert!(ExperimentConfig::parse("memory_cap_gib = -1").is_err());
    }
}
