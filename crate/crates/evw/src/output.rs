//! Artifact formatting: floats rounded to 10 significant digits, inputs
//! recorded by SHA-256 digest, files written only after all inputs validate.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{EvwError, Result};

pub const TOOL: &str = "evw";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds to 10 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.9e}").parse().expect("formatted float parses")
}

/// CSV field text of a float.
pub fn fmt(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // Avoid "-0".
        "0".to_string()
    } else if r.abs() < 1e-4 || r.abs() >= 1e15 {
        format!("{r:e}")
    } else {
        r.to_string()
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub inputs: Vec<InputDigest>,
}

impl Default for Meta {
    fn default() -> Self {
        Meta {
            tool: TOOL,
            version: VERSION,
            inputs: Vec::new(),
        }
    }
}

impl Meta {
    pub fn input(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }

    /// `#` comment lines heading CSV artifacts.
    pub fn csv_header(&self) -> String {
        let mut s = format!("# {} {}\n", self.tool, self.version);
        for i in &self.inputs {
            s.push_str(&format!("# {} {} sha256={}\n", i.role, i.path, i.sha256));
        }
        s
    }
}

/// Rounds every float inside a JSON value.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            *v = serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn json_text(mut v: Value) -> String {
    round_json(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

/// Rows of a CSV table, each field already formatted.
pub fn csv_text(meta: &Meta, extra_comments: &[String], header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
    let mut s = meta.csv_header();
    for c in extra_comments {
        s.push_str(&format!("# {c}\n"));
    }
    s.push_str(&body);
    s
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| EvwError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| EvwError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(dir.to_path_buf())
}
