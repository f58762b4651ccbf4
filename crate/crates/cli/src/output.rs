use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::Failure;

/// Rounds to 10 significant digits; non-finite values become `None`.
pub fn round10(v: f64) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    format!("{v:.9e}").parse().ok()
}

pub fn num(v: f64) -> Value {
    round10(v).map_or(Value::Null, Value::from)
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn cell(v: f64) -> String {
    round10(v).map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    text.push('\n');
    write_atomic(path, &text)
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: format!("{}\n", header.join(",")) }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        write_atomic(path, &self.text)
    }
}
