//! Flat `key = value` text files used for configs, instances and manifests.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique and
//! order is preserved on write.

use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvDoc {
    entries: Vec<(String, String)>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `key = value`, got {line:?}"),
                });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if doc.get(key).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key {key:?}"),
                });
            }
            doc.entries.push((key.to_string(), v.trim().to_string()));
        }
        Ok(doc)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_string())?;
        Ok(())
    }

    /// Sets `key`, replacing any earlier value in place.
    pub fn set(&mut self, key: impl Into<String>, value: impl Display) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| crate::error::invalid(format!("missing key {key:?}")))
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|e| crate::error::invalid(format!("key {key:?}: {e}")))
    }

    /// Whitespace-separated list value.
    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: Display,
    {
        self.require(key)?
            .split_whitespace()
            .map(|s| {
                s.parse()
                    .map_err(|e| crate::error::invalid(format!("key {key:?}: {e}")))
            })
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl std::fmt::Display for KvDoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let doc = KvDoc::parse("# comment\nalpha = 1\n\nbeta= two words \n").unwrap();
        assert_eq!(doc.get("alpha"), Some("1"));
        assert_eq!(doc.get("beta"), Some("two words"));
        assert_eq!(doc.to_string(), "alpha = 1\nbeta = two words\n");
        assert_eq!(doc.parse_value::<u32>("alpha").unwrap(), 1);
        assert_eq!(KvDoc::parse(&doc.to_string()).unwrap(), doc);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(KvDoc::parse("novalue"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(KvDoc::parse("a = 1\na = 2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(KvDoc::parse(" = 2"), Err(Error::Parse { .. })));
    }

    #[test]
    fn lists() {
        let doc = KvDoc::parse("xs = 1 2  3").unwrap();
        assert_eq!(doc.parse_list::<u8>("xs").unwrap(), vec![1, 2, 3]);
        assert!(doc.parse_list::<u8>("ys").is_err());
    }
}
