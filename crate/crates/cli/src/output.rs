//! Deterministic JSON/CSV rendering, config hashing and artifact writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// f64 with 17 significant digits; non-finite values become null in JSON.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap();
                out.push_str(&if x.is_finite() { fmt_f64(x) } else { "null".into() });
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(indent + 1), Value::String(k.clone()));
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn render_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s.push('\n');
    s
}

pub fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the effective configuration, in canonical rendering.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    sha256_hex(render_json(&to_value(cfg)).as_bytes())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stamp {
    pub config_hash: String,
    pub version: String,
}

impl Stamp {
    pub fn new<T: Serialize>(cfg: &T) -> Self {
        Stamp { config_hash: config_hash(cfg), version: overdet::VERSION.to_string() }
    }

    /// JSON artifact: the payload object with config_hash and version added.
    pub fn json(&self, payload: Value) -> String {
        let mut obj = match payload {
            Value::Object(m) => m,
            other => {
                let mut m = serde_json::Map::new();
                m.insert("data".into(), other);
                m
            }
        };
        obj.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        obj.insert("version".into(), Value::String(self.version.clone()));
        render_json(&Value::Object(obj))
    }

    /// CSV artifact with a leading comment line carrying the stamp.
    pub fn csv(&self, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r.iter().map(|x| fmt_f64(*x))).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)
            .map_err(|e| CliError::Io(e.to_string()))?;
        Ok(format!("# config_hash={} version={}\n{body}", self.config_hash, self.version))
    }
}

/// Named artifact contents, written after the computation finishes.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        self.files
            .iter()
            .map(|(name, content)| {
                let p = dir.join(name);
                std::fs::write(&p, content).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Ok(p)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(2.0 / 3.0).parse::<f64>().unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn rendering_is_canonical() {
        let a = render_json(&json!({"b": 1.5, "a": [1, 2.0], "c": null}));
        let b = render_json(&json!({"c": null, "a": [1, 2.0], "b": 1.5}));
        assert_eq!(a, b);
        let back: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(back["b"].as_f64(), Some(1.5));
    }

    #[test]
    fn csv_has_stamp() {
        let s = Stamp { config_hash: "abc".into(), version: "0.1.0".into() };
        let out = s.csv(&["x", "y"], vec![vec![1.0, 2.0]]).unwrap();
        assert!(out.starts_with("# config_hash=abc version=0.1.0\nx,y\n"));
    }
}
