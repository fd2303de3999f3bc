//! Flat `key = value` configuration files.
//!
//! ```text
//! # study of the nonlinear law
//! law = arctan
//! meshes = 20, 50
//! sizes = 5000, 50000
//! noise = 0, 0.1
//! algorithms = pg, ps
//! seeds = 0, 1, 2
//! sampling = uniform
//! output = study.csv
//! ```
//!
//! Keys are case-sensitive; `-` and `_` are interchangeable. Lines starting
//! with `#` and blank lines are ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type ConfigMap = BTreeMap<String, String>;

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

pub fn parse_config(text: &str, path: &Path) -> Result<ConfigMap> {
    let mut map = ConfigMap::new();
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some((key, value)) = s.split_once('=') else {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 'key = value', found '{s}'"),
            });
        };
        let key = normalize(key);
        if key.is_empty() {
            return Err(Error::Format {
                path: path.to_path_buf(),
                line: i + 1,
                message: "empty key".into(),
            });
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ConfigMap> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Inserts `value` under `key`, replacing what the file said.
pub fn set(map: &mut ConfigMap, key: &str, value: impl ToString) {
    map.insert(normalize(key), value.to_string());
}

pub fn get<T: FromStr>(map: &ConfigMap, key: &str) -> Result<Option<T>> {
    map.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("invalid value '{v}' for '{key}'")))
        })
        .transpose()
}

/// Comma-separated list.
pub fn get_list<T: FromStr>(map: &ConfigMap, key: &str) -> Result<Option<Vec<T>>> {
    map.get(key)
        .map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::InvalidArgument(format!("invalid entry '{s}' in '{key}'")))
                })
                .collect()
        })
        .transpose()
}
