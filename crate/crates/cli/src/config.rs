//! Flat key-value configuration files with `[section]` headers.
//!
//! Grammar: `#` starts a comment, blank lines are skipped, a section header
//! is `[name]`, and entries are `key = value`. Every key must be consumed by
//! the command that loads the file; unknown keys are rejected with their line
//! number.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: String) -> Result<T, ConfigError> {
    Err(ConfigError { message: msg })
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

/// Parsed configuration: a section -> key -> entry map.
#[derive(Debug)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') || line.len() < 3 {
                    return err(format!("line {line_no}: malformed section header '{line}'"));
                }
                current = line[1..line.len() - 1].trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some(eq) = line.find('=') else {
                return err(format!("line {line_no}: expected 'key = value', got '{line}'"));
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() {
                return err(format!("line {line_no}: empty key"));
            }
            if current.is_empty() {
                return err(format!("line {line_no}: key '{key}' appears before any [section]"));
            }
            let section = sections.get_mut(&current).expect("section inserted above");
            if section.insert(key.clone(), Entry { value, line: line_no, used: false }).is_some() {
                return err(format!("line {line_no}: duplicate key '{key}' in [{current}]"));
            }
        }
        Ok(Config { sections })
    }

    fn entry_mut(&mut self, section: &str, key: &str) -> Option<&mut Entry> {
        self.sections.get_mut(section)?.get_mut(key)
    }

    pub fn get_str(&mut self, section: &str, key: &str) -> Result<Option<String>, ConfigError> {
        match self.entry_mut(section, key) {
            Some(e) => {
                e.used = true;
                Ok(Some(e.value.clone()))
            }
            None => Ok(None),
        }
    }

    pub fn require_str(&mut self, section: &str, key: &str) -> Result<String, ConfigError> {
        match self.get_str(section, key)? {
            Some(v) => Ok(v),
            None => err(format!("missing key '{key}' in section [{section}]")),
        }
    }

    pub fn get_f64(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.entry_mut(section, key) {
            Some(e) => {
                e.used = true;
                let line = e.line;
                let raw = e.value.clone();
                match raw.parse::<f64>() {
                    Ok(v) => Ok(Some(v)),
                    Err(_) => err(format!("line {line}: key '{key}' is not a number: '{raw}'")),
                }
            }
            None => Ok(None),
        }
    }

    pub fn require_f64(&mut self, section: &str, key: &str) -> Result<f64, ConfigError> {
        match self.get_f64(section, key)? {
            Some(v) => Ok(v),
            None => err(format!("missing key '{key}' in section [{section}]")),
        }
    }

    pub fn f64_or(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.get_f64(section, key)?.unwrap_or(default))
    }

    pub fn get_i64(&mut self, section: &str, key: &str) -> Result<Option<i64>, ConfigError> {
        match self.entry_mut(section, key) {
            Some(e) => {
                e.used = true;
                let line = e.line;
                let raw = e.value.clone();
                match raw.parse::<i64>() {
                    Ok(v) => Ok(Some(v)),
                    Err(_) => err(format!("line {line}: key '{key}' is not an integer: '{raw}'")),
                }
            }
            None => Ok(None),
        }
    }

    pub fn get_bool(&mut self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get_str(section, key)? {
            Some(v) => match v.as_str() {
                "true" | "yes" | "on" | "1" => Ok(Some(true)),
                "false" | "no" | "off" | "0" => Ok(Some(false)),
                other => err(format!("key '{key}': expected a boolean, got '{other}'")),
            },
            None => Ok(None),
        }
    }

    /// Comma-separated list of floats, e.g. `axis = 0,1,0`.
    pub fn get_f64_list(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get_str(section, key)? {
            Some(v) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    match part.trim().parse::<f64>() {
                        Ok(x) => out.push(x),
                        Err(_) => {
                            return err(format!("key '{key}': '{}' is not a number", part.trim()))
                        }
                    }
                }
                Ok(Some(out))
            }
            None => Ok(None),
        }
    }

    /// Fails if any parsed key was never consumed.
    pub fn reject_unknown(&self) -> Result<(), ConfigError> {
        let mut complaints = Vec::new();
        for (section, entries) in &self.sections {
            for (key, e) in entries {
                if !e.used {
                    complaints.push(format!("line {}: unknown key '{key}' in [{section}]", e.line));
                }
            }
        }
        if complaints.is_empty() {
            Ok(())
        } else {
            err(complaints.join("; "))
        }
    }
}

/// FNV-1a 64-bit hash of the raw config text, hex encoded.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut s = String::with_capacity(24);
    let _ = write!(s, "fnv1a64:{h:016x}");
    s
}
