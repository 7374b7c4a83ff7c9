//! Line-based `key = value` files with optional `[section]` headers.
//!
//! Used for code specifications and architecture descriptions. `#` starts a
//! comment. Keys are unique within a section.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

/// A value together with the position of its first character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
    pub column: usize,
}

impl Entry {
    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.column, message)
    }

    pub fn parse<T: std::str::FromStr>(&self) -> Result<T, ParseError>
    where
        T::Err: fmt::Display,
    {
        self.value
            .parse::<T>()
            .map_err(|e| self.error(format!("invalid value `{}`: {e}", self.value)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvFile {
    /// Section name ("" for keys before the first header) to entries.
    pub sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut out = KvFile::default();
        let mut section = String::new();
        out.sections.entry(section.clone()).or_default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            if let Some(rest) = trimmed.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(ParseError::new(line_no, indent + 1, "unterminated section header"));
                };
                section = name.trim().to_string();
                if section.is_empty() {
                    return Err(ParseError::new(line_no, indent + 2, "empty section name"));
                }
                out.sections.entry(section.clone()).or_default();
                continue;
            }
            let Some(eq) = content.find('=') else {
                return Err(ParseError::new(line_no, indent + 1, "expected `key = value`"));
            };
            let key = content[..eq].trim();
            if key.is_empty() {
                return Err(ParseError::new(line_no, indent + 1, "missing key before `=`"));
            }
            let after = &content[eq + 1..];
            let value = after.trim();
            let column = eq + 2 + (after.len() - after.trim_start().len());
            let entries = out.sections.get_mut(&section).expect("section exists");
            if entries.contains_key(key) {
                return Err(ParseError::new(line_no, indent + 1, format!("duplicate key `{key}`")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: line_no,
                    column,
                },
            );
        }
        Ok(out)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&Entry, ParseError> {
        self.get(section, key).ok_or_else(|| {
            let where_ = if section.is_empty() {
                String::new()
            } else {
                format!(" in [{section}]")
            };
            ParseError::new(0, 0, format!("missing key `{key}`{where_}"))
        })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_positions() {
        let f = KvFile::parse("l = 6 # cycle\n[memory]\n  a =  y + x^3\n").unwrap();
        assert_eq!(f.get("", "l").unwrap().value, "6");
        let a = f.get("memory", "a").unwrap();
        assert_eq!(a.value, "y + x^3");
        assert_eq!((a.line, a.column), (3, 8));
    }

    #[test]
    fn rejects_garbage() {
        let e = KvFile::parse("l = 1\nnonsense\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(KvFile::parse("[oops\n").is_err());
        assert!(KvFile::parse("a = 1\na = 2\n").is_err());
    }
}
