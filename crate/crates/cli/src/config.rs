//! Run configuration: a JSON object of defaults, every key overridable by
//! the same-named command-line flag.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::Value;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRAIN_SIZE: usize = 8924;
pub const DEFAULT_VAL_SIZE: usize = 4396;

#[derive(Debug, Default)]
pub struct Config {
    map: serde_json::Map<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        match value {
            Value::Object(map) => Ok(Config { map }),
            _ => bail!("config {} must be a JSON object", path.display()),
        }
    }

    pub fn string(&self, key: &str, flag: Option<String>) -> Option<String> {
        flag.or_else(|| self.map.get(key).and_then(Value::as_str).map(str::to_string))
    }

    pub fn path(&self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        flag.or_else(|| {
            self.map
                .get(key)
                .and_then(Value::as_str)
                .map(PathBuf::from)
        })
    }

    pub fn required_path(&self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf> {
        self.path(key, flag)
            .with_context(|| format!("missing required input: --{}", key.replace('_', "-")))
    }

    pub fn u64(&self, key: &str, flag: Option<u64>, default: u64) -> u64 {
        flag.or_else(|| self.map.get(key).and_then(Value::as_u64))
            .unwrap_or(default)
    }

    pub fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> usize {
        flag.or_else(|| self.map.get(key).and_then(Value::as_u64).map(|v| v as usize))
            .unwrap_or(default)
    }

    pub fn flag(&self, key: &str, flag: bool) -> bool {
        flag || self.map.get(key).and_then(Value::as_bool).unwrap_or(false)
    }

    /// Every referenced input path must exist at validation time.
    pub fn check_input(&self, path: &Path) -> Result<()> {
        if !path.exists() {
            bail!("input path does not exist: {}", path.display());
        }
        Ok(())
    }
}
