//! Line-oriented `key = value` text used by every configuration file.
//!
//! Blank lines and `#` comments are ignored. `[name]` starts a section whose
//! keys are addressed as `name.key`. Values are raw text; lists are written
//! `[a, b, c]`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{parse_f64, CliError, Result};

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone)]
pub struct KvDoc {
    path: PathBuf,
    entries: Vec<Entry>,
}

impl KvDoc {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if !line.contains('=') {
                    section = name.trim().to_string();
                    continue;
                }
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::format(path, format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(CliError::format(path, format!("line {}: bad key {k:?}", i + 1)));
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            entries.push(Entry {
                key,
                value: v.trim().to_string(),
                line: i + 1,
            });
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &crate::error::read_text(path)?)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::format(&self.path, msg)
    }

    /// Rejects unknown keys, and repeats of keys not listed as repeatable.
    pub fn check_keys(&self, known: &[&str], repeatable: &[&str]) -> Result<()> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for e in &self.entries {
            if !known.contains(&e.key.as_str()) && !repeatable.contains(&e.key.as_str()) {
                return Err(self.err(format!("line {}: unknown key `{}`", e.line, e.key)));
            }
            if let Some(first) = seen.insert(&e.key, e.line) {
                if !repeatable.contains(&e.key.as_str()) {
                    return Err(self.err(format!(
                        "line {}: `{}` already set on line {first}",
                        e.line, e.key
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|e| e.key == key).map(|e| e.value.as_str())
    }

    pub fn all(&self, key: &str) -> Vec<&str> {
        self.entries.iter().filter(|e| e.key == key).map(|e| e.value.as_str()).collect()
    }

    fn context(&self, key: &str) -> String {
        format!("{} key `{key}`", self.path.display())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.str(key).map(|v| parse_f64(v, &self.context(key))).transpose()
    }

    pub fn req_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| self.err(format!("missing key `{key}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.str(key)
            .map(|v| crate::error::parse_usize(v, &self.context(key)))
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.str(key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| CliError::Number {
                    text: v.to_string(),
                    context: self.context(key),
                })
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.str(key)
            .map(|v| match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(self.err(format!("`{key}` must be true or false, got {v:?}"))),
            })
            .transpose()
    }

    /// `[a, b, …]` list of floats.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.str(key) else { return Ok(None) };
        let inner = v
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| self.err(format!("`{key}` must be a list like [1, 2, 3]")))?;
        if inner.trim().is_empty() {
            return Ok(Some(Vec::new()));
        }
        inner
            .split(',')
            .map(|t| parse_f64(t, &self.context(key)))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    pub fn req_list(&self, key: &str, len: usize) -> Result<Vec<f64>> {
        let l = self.list(key)?.ok_or_else(|| self.err(format!("missing key `{key}`")))?;
        if l.len() != len {
            return Err(self.err(format!("`{key}` needs {len} values, got {}", l.len())));
        }
        Ok(l)
    }
}

/// Formats a float so it parses back to the same bits.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_lists() {
        let text = "# header\nfx = 500  # focal\n[scan]\nnum_bins = 720\ndist = [0.1, -0.2, 0, 0]\n";
        let d = KvDoc::parse(Path::new("t"), text).unwrap();
        assert_eq!(d.req_f64("fx").unwrap(), 500.0);
        assert_eq!(d.usize("scan.num_bins").unwrap(), Some(720));
        assert_eq!(d.list("scan.dist").unwrap().unwrap(), vec![0.1, -0.2, 0.0, 0.0]);
        d.check_keys(&["fx", "scan.num_bins", "scan.dist"], &[]).unwrap();
        assert!(d.check_keys(&["fx"], &[]).is_err());
    }

    #[test]
    fn errors_are_categorized() {
        let d = KvDoc::parse(Path::new("t"), "fx = abc\nfx = 1\n").unwrap();
        assert!(matches!(d.f64("fx"), Ok(Some(1.0))));
        assert!(d.check_keys(&["fx"], &[]).is_err());
        let d = KvDoc::parse(Path::new("t"), "fx = abc\n").unwrap();
        assert!(matches!(d.f64("fx"), Err(CliError::Number { .. })));
        assert!(KvDoc::parse(Path::new("t"), "no equals sign\n").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-12, 1e300, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
