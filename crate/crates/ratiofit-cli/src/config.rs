//! Flat key-value run configuration.
//!
//! Format: UTF-8 text, one `key = value` per line, `#` starts a comment,
//! blank lines ignored. Every command declares its key schema; unknown keys
//! are a hard error, and each run writes its fully resolved configuration
//! (defaults included, keys sorted) alongside its outputs so reruns are
//! reproducible from the artifacts alone.

use std::collections::BTreeMap;
use std::path::Path;

use ratiofit::{Error, Result};

/// A key with its default; `None` marks a required key.
pub type SchemaEntry = (&'static str, Option<&'static str>);

#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parse `path` (if given), apply `key=value` overrides, validate against
    /// the schema and fill defaults.
    pub fn load(path: Option<&Path>, overrides: &[String], schema: &[SchemaEntry]) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected `key = value`, got {raw:?}",
                        path.display(),
                        lineno + 1
                    )));
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        for item in overrides {
            let Some((key, value)) = item.split_once('=') else {
                return Err(Error::Parse(format!(
                    "--set expects key=value, got {item:?}"
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }

        for key in values.keys() {
            if !schema.iter().any(|(k, _)| k == key) {
                return Err(Error::Config(format!("unknown config key {key:?}")));
            }
        }
        for (key, default) in schema {
            if !values.contains_key(*key) {
                match default {
                    Some(d) => {
                        values.insert((*key).to_string(), (*d).to_string());
                    }
                    None => {
                        return Err(Error::Config(format!("missing required config key {key:?}")))
                    }
                }
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("schema guarantees key {key:?}"))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        self.get(key)
            .parse()
            .map_err(|e| Error::Parse(format!("config key {key:?}: {e}")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        self.get(key)
            .parse()
            .map_err(|e| Error::Parse(format!("config key {key:?}: {e}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        self.get(key)
            .parse()
            .map_err(|e| Error::Parse(format!("config key {key:?}: {e}")))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(Error::Parse(format!(
                "config key {key:?}: expected a boolean, got {other:?}"
            ))),
        }
    }

    /// The fully resolved configuration, keys sorted, ready to write next to
    /// the outputs.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.values {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(value);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[SchemaEntry] = &[("alpha", Some("1.0")), ("beta", None), ("name", Some("x"))];

    #[test]
    fn parses_comments_defaults_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# a comment\nbeta = 2.5  # trailing\n\nname = run1\n").unwrap();
        let cfg = RunConfig::load(Some(&path), &["alpha=3.0".into()], SCHEMA).unwrap();
        assert_eq!(cfg.get_f64("alpha").unwrap(), 3.0);
        assert_eq!(cfg.get_f64("beta").unwrap(), 2.5);
        assert_eq!(cfg.get("name"), "run1");
        assert_eq!(
            cfg.resolved_text(),
            "alpha = 3.0\nbeta = 2.5\nname = run1\n"
        );
    }

    #[test]
    fn unknown_and_missing_keys_are_hard_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "beta = 1\ntypo_key = 2\n").unwrap();
        assert!(RunConfig::load(Some(&path), &[], SCHEMA).is_err());

        std::fs::write(&path, "alpha = 1\n").unwrap();
        let err = RunConfig::load(Some(&path), &[], SCHEMA);
        assert!(err.is_err(), "beta is required");
    }

    #[test]
    fn no_file_means_defaults_plus_overrides() {
        let cfg = RunConfig::load(None, &["beta=9".into()], SCHEMA).unwrap();
        assert_eq!(cfg.get_f64("alpha").unwrap(), 1.0);
        assert_eq!(cfg.get_f64("beta").unwrap(), 9.0);
    }
}
