//! The tool's flat key-value config grammar.
//!
//! Grammar, one directive per line:
//!
//! ```text
//! # comment (also `;`)
//! [section]
//! key = value
//! ```
//!
//! - Section names and keys match `[A-Za-z0-9_.-]+`; values run to the end
//!   of the line and are trimmed.
//! - Keys may repeat within a section; entries accumulate in file order.
//! - Lines before the first section header belong to the unnamed section
//!   `""`.
//!
//! Documents preserve entry order, so the same type doubles as a
//! deterministic writer (used for the run manifest).

use crate::error::{Error, Result};
use std::fmt::Write as _;

/// One `key = value` entry under a section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
}

/// An ordered key-value document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvDocument {
    pub entries: Vec<Entry>,
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | ' ' | '"'))
}

impl KvDocument {
    pub fn new() -> Self {
        KvDocument::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDocument::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(inner) = line.strip_prefix('[') {
                let name = inner.strip_suffix(']').ok_or_else(|| {
                    Error::parse(format!("line {}: unterminated section header", lineno + 1))
                })?;
                let name = name.trim();
                if !valid_ident(name) {
                    return Err(Error::parse(format!(
                        "line {}: invalid section name `{name}`",
                        lineno + 1
                    )));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if !valid_ident(key) {
                return Err(Error::parse(format!(
                    "line {}: invalid key `{key}`",
                    lineno + 1
                )));
            }
            doc.entries.push(Entry {
                section: section.clone(),
                key: key.to_string(),
                value: value.trim().to_string(),
            });
        }
        Ok(doc)
    }

    pub fn push(&mut self, section: &str, key: &str, value: impl ToString) {
        self.entries.push(Entry {
            section: section.to_string(),
            key: key.to_string(),
            value: value.to_string(),
        });
    }

    /// Last value for `section.key`, if any. Later entries override
    /// earlier ones, which is what makes flag-over-file layering work.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.section == section && e.key == key)
            .map(|e| e.value.as_str())
    }

    /// All values for `section.key` in file order.
    pub fn get_all(&self, section: &str, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.section == section && e.key == key)
            .map(|e| e.value.as_str())
            .collect()
    }

    pub fn sections(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.section.as_str()) {
                seen.push(e.section.as_str());
            }
        }
        seen
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.entries.iter().any(|e| e.section == section)
    }

    /// Typed getter helpers. Each reports the offending key on failure.
    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| {
                Error::parse(format!("[{section}] {key} = `{v}` is not a number"))
            }),
        }
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<u64>().map(Some).map_err(|_| {
                Error::parse(format!("[{section}] {key} = `{v}` is not an integer"))
            }),
        }
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(Some(true)),
                "false" | "no" | "0" | "off" => Ok(Some(false)),
                _ => Err(Error::parse(format!(
                    "[{section}] {key} = `{v}` is not a boolean"
                ))),
            },
        }
    }

    /// Serializes the document in entry order, grouping consecutive
    /// entries of the same section under one header.
    pub fn to_string(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        for e in &self.entries {
            if current != Some(e.section.as_str()) {
                if current.is_some() {
                    out.push('\n');
                }
                if !e.section.is_empty() {
                    let _ = writeln!(out, "[{}]", e.section);
                }
                current = Some(e.section.as_str());
            }
            let _ = writeln!(out, "{} = {}", e.key, e.value);
        }
        out
    }
}

/// Parses a duration value into milliseconds.
///
/// Accepts `150ms`, `0.15s`, `150us`, or a bare number meaning
/// milliseconds.
pub fn parse_duration_ms(s: &str) -> Result<f64> {
    let s = s.trim();
    let (num, scale) = if let Some(v) = s.strip_suffix("ms") {
        (v, 1.0)
    } else if let Some(v) = s.strip_suffix("us") {
        (v, 0.001)
    } else if let Some(v) = s.strip_suffix('s') {
        (v, 1000.0)
    } else {
        (s, 1.0)
    };
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::parse(format!("`{s}` is not a duration")))?;
    if value < 0.0 {
        return Err(Error::parse(format!("duration `{s}` must be non-negative")));
    }
    Ok(value * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_repeats() {
        let doc = KvDocument::parse(
            "# header comment\n\
             top = 1\n\
             [trace]\n\
             segment = fixate 100 100 200ms\n\
             segment = blink 150ms\n\
             seed = 42\n\
             [geometry]\n\
             width_mm = 530\n",
        )
        .unwrap();
        assert_eq!(doc.get("", "top"), Some("1"));
        assert_eq!(doc.get_all("trace", "segment").len(), 2);
        assert_eq!(doc.get_u64("trace", "seed").unwrap(), Some(42));
        assert_eq!(doc.get_f64("geometry", "width_mm").unwrap(), Some(530.0));
        assert_eq!(doc.sections(), vec!["", "trace", "geometry"]);
    }

    #[test]
    fn last_value_wins() {
        let doc = KvDocument::parse("[a]\nk = 1\nk = 2\n").unwrap();
        assert_eq!(doc.get("a", "k"), Some("2"));
        assert_eq!(doc.get_all("a", "k"), vec!["1", "2"]);
    }

    #[test]
    fn round_trips_through_writer() {
        let text = "[a]\nx = 1\ny = hello world\n\n[b]\nz = 3.5\n";
        let doc = KvDocument::parse(text).unwrap();
        assert_eq!(doc.to_string(), text);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(KvDocument::parse("[open\n").is_err());
        assert!(KvDocument::parse("no equals sign\n").is_err());
        assert!(KvDocument::parse("bad key! = 1\n").is_err());
    }

    #[test]
    fn duration_units() {
        assert_eq!(parse_duration_ms("150ms").unwrap(), 150.0);
        assert_eq!(parse_duration_ms("0.2s").unwrap(), 200.0);
        assert_eq!(parse_duration_ms("500us").unwrap(), 0.5);
        assert_eq!(parse_duration_ms("75").unwrap(), 75.0);
        assert!(parse_duration_ms("-5ms").is_err());
        assert!(parse_duration_ms("abc").is_err());
    }
}
