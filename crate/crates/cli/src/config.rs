//! Config file loading.
//!
//! Two formats are accepted, sniffed by the first non-blank character:
//!
//! * JSON — any file starting with `{`, deserialized directly into the
//!   target struct.
//! * Flat key=value text — one `key = value` pair per line, `#` comments,
//!   blank lines ignored. Keys are the same snake_case names as the JSON
//!   fields. Values are typed by shape: `true`/`false`, integers, floats,
//!   comma-separated numbers (becomes a list), anything else a bare string.
//!   The `encoding` key additionally understands `amplitude`, `identity`,
//!   and `power:k`.
//!
//! The key=value form exists so configs can be generated from any language
//! without a JSON library; both forms resolve to the identical structure.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::output::{CliError, Result};

/// Parse flat key=value text into a JSON object.
pub fn parse_kv(text: &str) -> Result<Value> {
    let mut map = Map::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Invalid(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Invalid(format!("line {}: empty key", lineno + 1)));
        }
        let parsed = parse_value(key, value.trim());
        if map.insert(key.to_string(), parsed).is_some() {
            return Err(CliError::Invalid(format!("line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(Value::Object(map))
}

fn parse_value(key: &str, s: &str) -> Value {
    if key == "encoding" {
        return encoding_value(s);
    }
    match s {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if s.contains(',') {
        let parts: Option<Vec<Value>> = s.split(',').map(|p| scalar_value(p.trim())).collect();
        if let Some(list) = parts {
            return Value::Array(list);
        }
    }
    scalar_value(s).unwrap_or_else(|| Value::String(s.to_string()))
}

fn scalar_value(s: &str) -> Option<Value> {
    if let Ok(n) = s.parse::<i64>() {
        return Some(Value::Number(n.into()));
    }
    if let Ok(x) = s.parse::<f64>() {
        return serde_json::Number::from_f64(x).map(Value::Number);
    }
    None
}

/// The CLI spelling of an encoding, shared by flags and config files.
pub fn encoding_value(s: &str) -> Value {
    match s {
        "amplitude" | "identity" => Value::String(s.to_string()),
        _ => {
            if let Some(k) = s.strip_prefix("power:") {
                if let Ok(k) = k.trim().parse::<u32>() {
                    let mut m = Map::new();
                    m.insert("power".into(), Value::Number(k.into()));
                    return Value::Object(m);
                }
            }
            // Let deserialization produce the error message.
            Value::String(s.to_string())
        }
    }
}

/// Load a config file (JSON or key=value) into a typed struct.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value = if text.trim_start().starts_with('{') {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: invalid JSON: {e}", path.display())))?
    } else {
        parse_kv(&text)?
    };
    serde_json::from_value(value)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}
