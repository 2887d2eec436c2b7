//! Flat key = value configuration files: `#` starts a comment, blank lines
//! are ignored, keys match the long flag names. Values from the file fill
//! any option the command line left unset; explicit flags always win.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("config key '{key}': cannot parse '{value}' as {wanted}")]
    BadValue {
        key: String,
        value: String,
        wanted: &'static str,
    },
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Malformed {
                line: i + 1,
                text: raw.to_string(),
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    /// Fill `slot` from the file when the command line left it empty.
    pub fn fill<T: std::str::FromStr>(
        &self,
        slot: &mut Option<T>,
        key: &str,
        wanted: &'static str,
    ) -> Result<(), ConfigError> {
        if slot.is_none() {
            if let Some(raw) = self.get(key) {
                let parsed = raw.parse::<T>().map_err(|_| ConfigError::BadValue {
                    key: key.to_string(),
                    value: raw.to_string(),
                    wanted,
                })?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_spacing() {
        let cfg = ConfigFile::parse("a = 0.3 # perturbation\n\n# full line comment\nb=1.0\n")
            .unwrap();
        assert_eq!(cfg.get("a"), Some("0.3"));
        assert_eq!(cfg.get("b"), Some("1.0"));
        assert_eq!(cfg.get("c"), None);
    }

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse("n = 16\n").unwrap();
        let mut from_cli = Some(64usize);
        cfg.fill(&mut from_cli, "n", "integer").unwrap();
        assert_eq!(from_cli, Some(64));
        let mut unset: Option<usize> = None;
        cfg.fill(&mut unset, "n", "integer").unwrap();
        assert_eq!(unset, Some(16));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("just a sentence\n").is_err());
        let cfg = ConfigFile::parse("n = not-a-number\n").unwrap();
        let mut slot: Option<usize> = None;
        assert!(cfg.fill(&mut slot, "n", "integer").is_err());
    }
}
