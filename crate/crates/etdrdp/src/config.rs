//! Plain-text configuration files: one `key = value` pair per line, `#`
//! starts a comment, blank lines are ignored. Every key is also a CLI flag,
//! and flags given on the command line win over the file.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    MissingEquals { line: usize, text: String },
    #[error("line {line}: empty key")]
    EmptyKey { line: usize },
    #[error("could not read config file: {0}")]
    Io(String),
}

/// Parse config text into key/value pairs. Later assignments to the same key
/// override earlier ones. Safe on arbitrary input.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::MissingEquals { line: line_no, text: line.to_string() })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::EmptyKey { line: line_no });
        }
        map.insert(key.to_string(), value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
