use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()).into())
}

/// A flat key/value file; command-line flags take precedence over its entries.
#[derive(Clone, Debug, Default)]
pub struct FileConfig {
    entries: Map<String, Value>,
    resolved: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(entries)) => Ok(Self {
                entries,
                resolved: Map::new(),
            }),
            Ok(_) => config_error(format!("{} is not a JSON object", path.display())),
            Err(e) => config_error(format!("{}: {e}", path.display())),
        }
    }

    pub fn raw(&self) -> &Map<String, Value> {
        &self.entries
    }

    /// `flag`, else the file entry, else `default`; the choice is remembered for the hash.
    pub fn pick<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: DeserializeOwned + serde::Serialize,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.entries.get(key) {
                Some(raw) => match serde_json::from_value(raw.clone()) {
                    Ok(v) => v,
                    Err(e) => return config_error(format!("key '{key}': {e}")),
                },
                None => default,
            },
        };
        self.resolved
            .insert(key.to_string(), serde_json::to_value(&v)?);
        Ok(v)
    }

    /// Records a value that did not come from `pick`.
    pub fn note(&mut self, key: &str, v: impl serde::Serialize) {
        self.resolved.insert(
            key.to_string(),
            serde_json::to_value(v).unwrap_or(Value::Null),
        );
    }

    /// First 16 hex digits of the SHA-256 of the resolved parameters.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.resolved).unwrap_or_default();
        Sha256::digest(text.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parses `inf`/`infinity` as well as ordinary numbers.
pub fn parse_exponent(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("{s}: {e}"))
}

pub struct Output {
    pub dir: PathBuf,
    pub hash: String,
}

impl Output {
    pub fn provenance(&self) -> String {
        format!(
            "# padic-lab {} config={}\n",
            env!("CARGO_PKG_VERSION"),
            self.hash
        )
    }

    /// Writes `body` (header row included) under the provenance comment.
    pub fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, format!("{}{body}", self.provenance()))
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn print_csv(&self, body: &str) {
        print!("{}{body}", self.provenance());
    }

    pub fn write_replay(&self, name: &str, value: &Value) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)?)?;
        Ok(path)
    }
}
