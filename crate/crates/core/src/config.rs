//! Flat `key = value` configuration text.
//!
//! Blank lines and lines starting with `#` are ignored. Every other line must
//! contain `=`; keys are matched exactly and must be known to some section.

use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// A configuration struct that accepts some subset of keys.
pub trait KeyValueSection {
    /// Applies one entry. `Ok(false)` means the key belongs to another section.
    fn set(&mut self, key: &str, value: &str) -> Result<bool, String>;
}

/// `(line number, key, value)` triples in file order.
pub fn parse_entries(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((i + 1, key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Feeds every entry to the first section that claims it.
pub fn apply(text: &str, sections: &mut [&mut dyn KeyValueSection]) -> Result<(), ConfigError> {
    for (line, key, value) in parse_entries(text)? {
        let mut claimed = false;
        for s in sections.iter_mut() {
            match s.set(&key, &value) {
                Ok(true) => {
                    claimed = true;
                    break;
                }
                Ok(false) => {}
                Err(message) => return Err(ConfigError::Value { line, key, message }),
            }
        }
        if !claimed {
            return Err(ConfigError::UnknownKey { line, key });
        }
    }
    Ok(())
}

pub fn parse_value<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("cannot parse `{value}`: {e}"))
}

pub fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, found `{value}`")),
    }
}

/// Comma-separated list; the empty string is the empty list.
pub fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|s| parse_value(s.trim())).collect()
}
